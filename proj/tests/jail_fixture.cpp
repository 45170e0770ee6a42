// Copyright 2026 The Orbitjail Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small static program run inside test jails. The first argument picks a
// behaviour; output goes to stdout so tests can inspect it through a pipe.
#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/syscall.h>
#include <sys/utsname.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

namespace {

int memhog(long mb) {
  std::vector<char*> blocks;
  for (long i = 0; i < mb; ++i) {
    char* p = static_cast<char*>(std::malloc(1 << 20));
    if (!p) {
      std::printf("alloc-failed mb=%ld\n", i);
      return 3;
    }
    std::memset(p, 0x5a, 1 << 20);
    blocks.push_back(p);
  }
  std::printf("allocated mb=%ld\n", mb);
  return 0;
}

int forkbomb(int n) {
  int ok = 0, failed = 0;
  std::vector<pid_t> kids;
  for (int i = 0; i < n; ++i) {
    pid_t pid = fork();
    if (pid == 0) {
      pause();
      _exit(0);
    }
    if (pid < 0) {
      ++failed;
    } else {
      ++ok;
      kids.push_back(pid);
    }
  }
  std::printf("forked ok=%d failed=%d\n", ok, failed);
  std::fflush(stdout);
  for (pid_t k : kids) kill(k, SIGKILL);
  for (pid_t k : kids) waitpid(k, nullptr, 0);
  return failed ? 4 : 0;
}

int raw_syscall(const std::string& name) {
  long r = -1;
  if (name == "socket") {
    r = syscall(SYS_socket, AF_INET, SOCK_STREAM, 0);
  } else if (name == "getppid") {
    r = syscall(SYS_getppid);
  } else if (name == "uname") {
    struct utsname u;
    r = syscall(SYS_uname, &u);
  } else if (name == "sethostname") {
    r = syscall(SYS_sethostname, "x", 1);
  } else if (name == "open") {
    r = syscall(SYS_open, "/", O_RDONLY);
  } else if (name == "personality") {
    r = syscall(SYS_personality, 0xffffffffUL);
  } else if (name == "execve") {
    char* argv[] = {const_cast<char*>("/proc/self/exe"), const_cast<char*>("true"), nullptr};
    r = syscall(SYS_execve, "/proc/self/exe", argv, environ);
  } else {
    std::printf("unknown syscall %s\n", name.c_str());
    return 2;
  }
  std::printf("syscall %s ret=%ld errno=%d\n", name.c_str(), r, r < 0 ? errno : 0);
  return 0;
}

int fork_syscall(const std::string& name) {
  pid_t pid = fork();
  if (pid == 0) _exit(raw_syscall(name));
  int st = 0;
  waitpid(pid, &st, 0);
  if (WIFSIGNALED(st)) std::printf("child killed signal=%d\n", WTERMSIG(st));
  else std::printf("child exited code=%d\n", WEXITSTATUS(st));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return 2;
  const std::string cmd = argv[1];
  const char* arg = argc > 2 ? argv[2] : "";
  if (cmd == "true") return 0;
  if (cmd == "exit") return std::atoi(arg);
  if (cmd == "echo") {
    for (int i = 2; i < argc; ++i) std::printf("%s%s", i > 2 ? " " : "", argv[i]);
    std::printf("\n");
    return 0;
  }
  if (cmd == "sentinel") {
    std::printf("SENTINEL-RAN\n");
    return 0;
  }
  if (cmd == "id") {
    char host[256] = {};
    gethostname(host, sizeof host - 1);
    std::printf("uid=%d gid=%d pid=%d host=%s\n", getuid(), getgid(), getpid(), host);
    return 0;
  }
  if (cmd == "env") {
    for (char** e = environ; *e; ++e) std::printf("%s\n", *e);
    return 0;
  }
  if (cmd == "memhog") return memhog(std::atol(arg));
  if (cmd == "forkbomb") return forkbomb(std::atoi(arg));
  if (cmd == "syscall") return raw_syscall(arg);
  if (cmd == "fork-syscall") return fork_syscall(arg);
  if (cmd == "getppid-loop") {
    const int n = std::atoi(arg);
    for (int i = 0; i < n; ++i) syscall(SYS_getppid);
    std::printf("looped %d\n", n);
    return 0;
  }
  if (cmd == "exists") {
    struct stat st;
    const bool present = stat(arg, &st) == 0;
    std::printf("%s %s\n", arg, present ? "present" : "absent");
    return present ? 0 : 1;
  }
  if (cmd == "create") {
    int fd = open(arg, O_WRONLY | O_CREAT | O_EXCL, 0644);
    if (fd < 0) {
      std::printf("create %s failed errno=%d\n", arg, errno);
      return 1;
    }
    close(fd);
    std::printf("created %s\n", arg);
    return 0;
  }
  if (cmd == "sleep") {
    sleep(static_cast<unsigned>(std::atoi(arg)));
    return 0;
  }
  std::printf("unknown command %s\n", cmd.c_str());
  return 2;
}
