#!/usr/bin/env python3
# Copyright 2026 The Orbitjail Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates src/syscall_tables.inc from the kernel UAPI headers.

x86_64 numbers come straight from asm/unistd_64.h. aarch64 uses the
asm-generic table, which is macro-driven, so the header is compiled with the
arm64 feature macros and the resolved values are printed by a host program.
"""

import os
import re
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
X86_HEADER = "/usr/include/x86_64-linux-gnu/asm/unistd_64.h"
GENERIC_HEADER = "/usr/include/asm-generic/unistd.h"
ARM64_WANTS = [
    "__ARCH_WANT_RENAMEAT",
    "__ARCH_WANT_NEW_STAT",
    "__ARCH_WANT_SET_GET_RLIMIT",
    "__ARCH_WANT_TIME32_SYSCALLS",
    "__ARCH_WANT_SYS_CLONE3",
    "__ARCH_WANT_MEMFD_SECRET",
]
SKIP = {"syscalls", "arch_specific_syscall"}


def x86_64_table():
    table = {}
    with open(X86_HEADER) as f:
        for line in f:
            m = re.match(r"#define __NR_(\w+)\s+(\d+)\s*$", line)
            if m:
                table[m.group(1)] = int(m.group(2))
    return table


def aarch64_table():
    defines = ["-D%s" % w for w in ARM64_WANTS] + ["-D__BITS_PER_LONG=64"]
    macros = subprocess.run(
        ["cpp", "-dM", *defines, "-include", GENERIC_HEADER, "/dev/null"],
        check=True, capture_output=True, text=True).stdout
    names = sorted({m.group(1) for m in re.finditer(r"#define __NR_(\w+) ", macros)}
                   - SKIP)
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "dump.c")
        exe = os.path.join(tmp, "dump")
        with open(src, "w") as f:
            for d in ARM64_WANTS:
                f.write("#define %s\n" % d)
            f.write("#define __BITS_PER_LONG 64\n#include <stdio.h>\n")
            f.write('#include "%s"\nint main(void) {\n' % GENERIC_HEADER)
            for n in names:
                f.write('  printf("%%s %%d\\n", "%s", (int)(__NR_%s));\n' % (n, n))
            f.write("  return 0;\n}\n")
        subprocess.run(["cc", "-w", "-o", exe, src], check=True)
        out = subprocess.run([exe], check=True, capture_output=True, text=True).stdout
    table = {}
    for line in out.splitlines():
        name, nr = line.split()
        table[name] = int(nr)
    return table


def emit(out, ident, table):
    out.write("inline constexpr SyscallEntry %s[] = {\n" % ident)
    for name, nr in sorted(table.items(), key=lambda kv: kv[1]):
        out.write('    {"%s", %d},\n' % (name, nr))
    out.write("};\n\n")



def main():
    x86 = x86_64_table()
    arm = aarch64_table()
    for t in (x86, arm):
        if len(set(t.values())) != len(t):
            sys.exit("table is not bijective")
    path = os.path.join(ROOT, "src", "syscall_tables.inc")
    with open(path, "w") as out:
        out.write("// Generated by tools/gen_syscall_tables.py. Do not edit.\n\n")
        emit(out, "kX8664Syscalls", x86)
        emit(out, "kAarch64Syscalls", arm)
    print("x86_64: %d entries, aarch64: %d entries" % (len(x86), len(arm)))


if __name__ == "__main__":
    main()
