#include "dl4/sequencer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "dl4/errors.hpp"

namespace dl4 {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return trim(hash == std::string_view::npos ? line : line.substr(0, hash));
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    fn(text.substr(0, nl), line_no);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

double parse_number(std::string_view token, std::size_t line, std::string_view what) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end || token.empty() || !std::isfinite(v)) {
    throw ParseError("malformed number '" + std::string(token) + "' for " + std::string(what), line);
  }
  return v;
}

ParamId parse_param_name(std::string_view token, std::size_t line) {
  auto id = param_from_name(token);
  if (!id) throw ParseError("unknown parameter '" + std::string(token) + "'", line);
  return *id;
}

void validate_at(ParamId id, double v, std::size_t line) {
  try {
    validate_param(id, v);
  } catch (const DomainError& e) {
    throw ParseError(e.what(), line);
  }
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool assigns(const Step& s, ParamId id) {
  return std::any_of(s.assignments.begin(), s.assignments.end(),
                     [id](const Assignment& a) { return a.param == id; });
}

}  // namespace

StepList parse_step_list(std::string_view text) {
  StepList list;
  std::size_t first_step_line = 0;

  for_each_line(text, [&](std::string_view raw, std::size_t line) {
    const auto content = strip_comment(raw);
    if (content.empty()) return;

    const auto words = split_ws(content);
    if (words[0] == "policy") {
      if (words.size() != 2) throw ParseError("expected 'policy <flag>'", line);
      if (words[1] == "discard_lfo") {
        list.policy.discard_lfo = true;
      } else if (words[1] == "comb_df_override") {
        list.policy.comb_df_override = true;
      } else {
        throw ParseError("unknown policy '" + std::string(words[1]) + "'", line);
      }
      return;
    }
    if (words[0] != "step") {
      throw ParseError("expected 'step' or 'policy', got '" + std::string(words[0]) + "'", line);
    }

    const auto colon = content.find(':');
    if (colon == std::string_view::npos) throw ParseError("missing ':' after step label", line);
    auto header = trim(content.substr(4, colon - 4));
    Step step;
    if (const auto comma = header.find(','); comma != std::string_view::npos) {
      const auto tag = trim(header.substr(comma + 1));
      if (tag != "comb") throw ParseError("unknown step tag '" + std::string(tag) + "'", line);
      step.comb = true;
      header = trim(header.substr(0, comma));
    }
    if (header.empty()) throw ParseError("empty step label", line);
    step.label = std::string(header);

    for (auto token : split_ws(content.substr(colon + 1))) {
      const auto eq = token.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw ParseError("expected KEY=VALUE, got '" + std::string(token) + "'", line);
      }
      const auto id = parse_param_name(token.substr(0, eq), line);
      const auto value = parse_number(token.substr(eq + 1), line, name(id));
      validate_at(id, value, line);
      if (assigns(step, id)) {
        throw ParseError("parameter " + std::string(name(id)) + " assigned twice", line);
      }
      step.assignments.push_back({id, value});
    }
    std::sort(step.assignments.begin(), step.assignments.end(),
              [](const Assignment& a, const Assignment& b) { return a.param < b.param; });

    if (list.steps.empty()) first_step_line = line;
    list.steps.push_back(std::move(step));
  });

  if (list.steps.empty()) throw ParseError("step list contains no steps");
  for (auto required : {ParamId::DS, ParamId::DF, ParamId::RG, ParamId::MX}) {
    if (!assigns(list.steps.front(), required)) {
      throw ParseError("first step must set " + std::string(name(required)), first_step_line);
    }
  }
  return list;
}

std::string serialize(const StepList& list) {
  std::string out;
  if (list.policy.discard_lfo) out += "policy discard_lfo\n";
  if (list.policy.comb_df_override) out += "policy comb_df_override\n";
  for (const auto& step : list.steps) {
    out += "step " + step.label + (step.comb ? ",comb" : "") + ":";
    for (const auto& a : step.assignments) {
      out += ' ';
      out += name(a.param);
      out += '=';
      out += format_number(a.value);
    }
    out += '\n';
  }
  return out;
}

Dl4Params apply_step(Dl4Params params, const Step& step, const StepPolicy& policy) {
  for (const auto& a : step.assignments) set_param(params, a.param, a.value);
  if (policy.comb_df_override && step.comb && params.df == kCombScoreDf) {
    params.df = kCombOverrideDf;
  }
  if (policy.discard_lfo) {
    params.lfo_width = 0.0;
    params.lfo_speed = 0.0;
  }
  return params;
}

Sequencer::Sequencer(StepList list, const Dl4Params& initial)
    : list_(std::move(list)), params_(initial) {}

bool Sequencer::advance() {
  const std::size_t next = index_ ? *index_ + 1 : 0;
  if (next >= list_.steps.size()) return false;
  params_ = apply_step(params_, list_.steps[next], list_.policy);
  index_ = next;
  return true;
}

void Sequencer::set(ParamId id, double value) { set_param(params_, id, value); }

std::string_view Sequencer::label() const noexcept {
  return index_ ? std::string_view(list_.steps[*index_].label) : std::string_view();
}

TimedScript parse_timed_script(std::string_view text) {
  TimedScript script;
  for_each_line(text, [&](std::string_view raw, std::size_t line) {
    const auto content = strip_comment(raw);
    if (content.empty()) return;
    const auto words = split_ws(content);

    ScriptEvent ev;
    ev.time_ms = parse_number(words[0], line, "time");
    if (ev.time_ms < 0.0) throw ParseError("negative event time", line);
    if (words.size() == 2 && words[1] == "step") {
      ev.kind = ScriptEvent::Kind::Step;
    } else if (words.size() == 4 && words[1] == "set") {
      ev.kind = ScriptEvent::Kind::Set;
      ev.param = parse_param_name(words[2], line);
      ev.value = parse_number(words[3], line, name(ev.param));
      validate_at(ev.param, ev.value, line);
    } else {
      throw ParseError("expected '<time_ms> step' or '<time_ms> set <KEY> <value>'", line);
    }
    if (!script.events.empty() && ev.time_ms < script.events.back().time_ms) {
      throw ParseError("event times must be non-decreasing", line);
    }
    script.events.push_back(ev);
  });
  return script;
}

std::int64_t event_sample(const ScriptEvent& e, double sample_rate) {
  // The epsilon keeps exact-ms events (100 ms @ 44.1 kHz) off the wrong side
  // of a rounding error.
  return static_cast<std::int64_t>(std::floor(e.time_ms * sample_rate / 1000.0 + 1e-9));
}

std::span<const ScriptEvent> events_between(const TimedScript& script, std::int64_t t0,
                                            std::int64_t t1, double sample_rate) {
  if (t1 <= t0) return {};
  const auto& ev = script.events;
  auto first = std::partition_point(ev.begin(), ev.end(), [&](const ScriptEvent& e) {
    return event_sample(e, sample_rate) < t0;
  });
  auto last = std::partition_point(first, ev.end(), [&](const ScriptEvent& e) {
    return event_sample(e, sample_rate) < t1;
  });
  return {first, last};
}

}  // namespace dl4
