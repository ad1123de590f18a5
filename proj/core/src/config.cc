/* Copyright 2026 The SSSM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "sssm/config.h"

#include <charconv>
#include <string_view>
#include <variant>
#include <vector>

#include "sssm/error.h"
#include "sssm/image_io.h"

namespace sssm {
namespace {

using Slot = std::variant<int*, double*, std::uint64_t*, std::filesystem::path*>;

struct Field {
  const char* key;
  Slot slot;
};

std::vector<Field> net_fields(NetConfig& n) {
  return {{"feature_layers", &n.feature_layers},
          {"feature_dim", &n.feature_dim},
          {"kernel", &n.kernel},
          {"skip_every", &n.skip_every},
          {"disparity_range", &n.disparity_range},
          {"restdm_scales", &n.restdm_scales}};
}

std::vector<Field> run_fields(RunConfig& c) {
  std::vector<Field> f = net_fields(c.net);
  TrainConfig& t = c.train;
  LossWeights& l = c.loss;
  const std::vector<Field> rest = {
      {"learning_rate", &t.learning_rate},
      {"learning_rate_late", &t.learning_rate_late},
      {"lr_drop_iteration", &t.lr_drop_iteration},
      {"crop_height", &t.crop_height},
      {"crop_width", &t.crop_width},
      {"max_iterations", &t.max_iterations},
      {"smoothness_scratch", &t.smoothness_scratch},
      {"smoothness_converged", &t.smoothness_converged},
      {"smoothness_switch_iteration", &t.smoothness_switch_iteration},
      {"rmsprop_decay", &t.rmsprop_decay},
      {"rmsprop_epsilon", &t.rmsprop_epsilon},
      {"border_margin", &t.border_margin},
      {"checkpoint_every", &t.checkpoint_every},
      {"weight_photometric", &l.photometric},
      {"weight_consistency", &l.consistency},
      {"weight_mdh", &l.mdh},
      {"lambda_ssim", &l.ssim},
      {"lambda_l1", &l.l1},
      {"lambda_gradient", &l.gradient},
      {"manifest", &c.manifest},
      {"checkpoint", &c.checkpoint},
      {"out", &c.out},
      {"seed", &c.seed},
  };
  f.insert(f.end(), rest.begin(), rest.end());
  return f;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
bool parse_number(std::string_view text, N& out) {
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && p == end;
}

bool assign(const Slot& slot, std::string_view value) {
  return std::visit(
      [value](auto* p) -> bool {
        using P = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<P, std::filesystem::path>) {
          *p = std::filesystem::path(std::string(value));
          return true;
        } else {
          return parse_number(value, *p);
        }
      },
      slot);
}

std::string render(const Slot& slot) {
  return std::visit(
      [](auto* p) -> std::string {
        using P = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<P, std::filesystem::path>) {
          return p->string();
        } else {
          char buf[64];
          auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), *p);
          return std::string(buf, end);
        }
      },
      slot);
}

void parse_into(const std::string& text, const std::vector<Field>& fields) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    const std::size_t offset = pos;
    pos = eol + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value', got '" + std::string(line) + "'",
                       offset);
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : fields) {
      if (key == f.key) field = &f;
    }
    if (field == nullptr) {
      throw ParseError("unknown config key '" + std::string(key) + "'", offset);
    }
    if (!assign(field->slot, value)) {
      throw ParseError("bad value '" + std::string(value) + "' for key '" +
                           std::string(key) + "'",
                       offset);
    }
  }
}

std::string format(const std::vector<Field>& fields) {
  std::string out;
  for (const Field& f : fields) {
    out += f.key;
    out += " = ";
    out += render(f.slot);
    out += '\n';
  }
  return out;
}

}  // namespace

void RunConfig::apply_toy() {
  net = NetConfig::toy();
  train.crop_height = 64;
  train.crop_width = 128;
}

void RunConfig::validate() const {
  net.validate();
  train.validate();
  loss.validate();
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  parse_into(text, run_fields(base));
  base.train.seed = base.seed;
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  const std::string text = read_file(path);
  try {
    return parse_run_config(text, std::move(base));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
}

std::string format_run_config(const RunConfig& config) {
  RunConfig copy = config;
  return format(run_fields(copy));
}

std::string format_net_config(const NetConfig& net) {
  NetConfig copy = net;
  return format(net_fields(copy));
}

NetConfig parse_net_config(const std::string& text) {
  NetConfig net;
  parse_into(text, net_fields(net));
  net.validate();
  return net;
}

std::filesystem::path net_config_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".cfg";
  return p;
}

}  // namespace sssm
