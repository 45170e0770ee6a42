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

#include "orbitjail/broker.hpp"

namespace orbitjail::mw {

namespace {

Frame error_frame(const std::string& name, std::uint32_t corr, std::string_view reason) {
  return Frame{FrameType::kErr, name, corr, std::string(reason)};
}

}  // namespace

std::vector<Delivery> BrokerCore::route(ConnId from, const Frame& f) {
  std::vector<Delivery> out;
  switch (f.type) {
    case FrameType::kSub:
      subscriptions_[f.name].insert(from);
      if (f.corr_id != 0) out.push_back({from, Frame{FrameType::kResp, f.name, f.corr_id, {}}});
      break;
    case FrameType::kRegSvc: {
      auto [it, inserted] = services_.emplace(f.name, from);
      if (!inserted && it->second != from) {
        out.push_back({from, error_frame(f.name, f.corr_id, kErrDuplicateService)});
      } else if (f.corr_id != 0) {
        out.push_back({from, Frame{FrameType::kResp, f.name, f.corr_id, {}}});
      }
      break;
    }
    case FrameType::kPub: {
      auto it = subscriptions_.find(f.name);
      if (it == subscriptions_.end()) break;
      for (ConnId sub : it->second) {
        if (sub != from) out.push_back({sub, Frame{FrameType::kPub, f.name, 0, f.payload}});
      }
      break;
    }
    case FrameType::kReq: {
      auto it = services_.find(f.name);
      if (it == services_.end()) {
        out.push_back({from, error_frame(f.name, f.corr_id, kErrNoSuchService)});
        break;
      }
      // Broker-assigned ids keep in-flight requests distinct across clients.
      std::uint32_t corr = next_corr_++;
      while (corr == 0 || pending_.count(corr)) corr = next_corr_++;
      pending_[corr] = Pending{from, f.corr_id, it->second, f.name};
      out.push_back({it->second, Frame{FrameType::kReq, f.name, corr, f.payload}});
      break;
    }
    case FrameType::kResp:
    case FrameType::kErr: {
      auto it = pending_.find(f.corr_id);
      if (it == pending_.end() || it->second.provider != from) {
        dropped_.push_back(std::string(to_string(f.type)) + " " + f.name + " corr=" + std::to_string(f.corr_id) +
                           ": unknown corr_id");
        break;
      }
      const Pending p = it->second;
      pending_.erase(it);
      if (p.requester == 0) {
        dropped_.push_back(std::string(to_string(f.type)) + " " + p.service + ": requester disconnected");
        break;
      }
      out.push_back({p.requester, Frame{f.type, p.service, p.requester_corr, f.payload}});
      break;
    }
  }
  return out;
}

std::vector<Delivery> BrokerCore::disconnect(ConnId conn) {
  std::vector<Delivery> out;
  for (auto it = subscriptions_.begin(); it != subscriptions_.end();) {
    it->second.erase(conn);
    it = it->second.empty() ? subscriptions_.erase(it) : std::next(it);
  }
  for (auto it = services_.begin(); it != services_.end();) {
    it = it->second == conn ? services_.erase(it) : std::next(it);
  }
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (it->second.provider == conn) {
      if (it->second.requester != conn) {
        out.push_back({it->second.requester,
                       error_frame(it->second.service, it->second.requester_corr, kErrProviderGone)});
      }
      it = pending_.erase(it);
    } else if (it->second.requester == conn) {
      // The reply will be dropped when it arrives; keep the entry until then
      // so the provider's answer is matched and removed exactly once.
      it->second.requester = 0;
      ++it;
    } else {
      ++it;
    }
  }
  return out;
}

}  // namespace orbitjail::mw
