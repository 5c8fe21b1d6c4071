#include "bootshuffle/report.hpp"

#include <cstdio>

#include "json.hpp"

namespace bootshuffle::report {

using json = nlohmann::ordered_json;

std::string hex32(std::uint32_t value) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08X", value);
  return buf;
}

namespace {

json instruction_json(const arm::Instruction& insn) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, arm::Branch>) return {{"kind", "Branch"}, {"target", hex32(v.target)}};
        else if constexpr (std::is_same_v<T, arm::Nop>) return {{"kind", "Nop"}};
        else return {{"kind", "Undecodable"}, {"word", hex32(v.word)}};
      },
      insn);
}

json outcome_json(const boot::BootOutcome& outcome) {
  json j{{"kind", boot::outcome_name(outcome)}};
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, boot::ReachedFirmEntry>) {
          j["version"] = v.version_label;
        } else if constexpr (std::is_same_v<T, boot::PayloadExecuted>) {
          j["hook_id"] = hex32(v.hook_id);
          j["pc"] = hex32(v.pc);
          j["captured_len"] = v.captured.size();
        } else if constexpr (std::is_same_v<T, boot::Crash>) {
          j["pc"] = hex32(v.pc);
          j["word"] = hex32(v.word);
          j["fetch_fault"] = v.fetch_fault;
        } else if constexpr (std::is_same_v<T, boot::Hang>) {
          j["steps"] = v.steps;
        } else {
          j["reason"] = v.reason;
        }
      },
      outcome);
  return j;
}

json boot_object(const boot::BootReport& b) {
  json j;
  j["outcome"] = outcome_json(b.outcome);
  j["booted_slot"] = b.booted_slot ? json(std::string(firm_slot_name(*b.booted_slot))) : json(nullptr);
  json read = json::array();
  for (FirmSlot s : b.partitions_read) read.push_back(std::string(firm_slot_name(s)));
  j["partitions_read"] = read;
  j["loader_version"] = b.loader_version ? json(*b.loader_version) : json(nullptr);
  j["loader_variant"] = b.loader_variant ? json(std::string(loader_variant_name(*b.loader_variant))) : json(nullptr);
  j["entry_word"] = b.entry_word ? json(hex32(*b.entry_word)) : json(nullptr);
  j["keysector_zeroized_before_jump"] = b.keysector_zeroized_before_jump;
  j["trace"] = b.trace_lines();
  return j;
}

json secrets_json(const std::optional<Secrets>& secrets) {
  if (!secrets) return nullptr;
  json keys = json::array();
  for (const Key& k : secrets->keysector_plaintext) keys.push_back(to_hex(k));
  return {{"otp", to_hex(secrets->otp)}, {"keysector_plaintext", keys}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string boot_json(const boot::BootReport& boot) { return dump(boot_object(boot)); }

std::string scan_json(const attacks::ScanReport& scan, std::string_view mode) {
  json entries = json::array();
  for (const auto& e : scan.entries)
    entries.push_back({{"version", e.version_label}, {"key", e.key_number}, {"entry_word", hex32(e.entry_word)}});
  json hits = json::array();
  std::size_t usable = 0;
  for (const auto& h : scan.hits) {
    const bool in_ram = h.target_usability == attacks::TargetUsability::InRam;
    usable += in_ram;
    hits.push_back({{"version", h.version_label},
                    {"key", h.key_number},
                    {"entry_word", hex32(h.entry_word)},
                    {"decoded", instruction_json(h.decoded)},
                    {"target_usability", in_ram ? "InRam" : "OutOfRange"}});
  }
  json j;
  j["mode"] = std::string(mode);
  j["entries_examined"] = scan.entries.size();
  j["branch_hits"] = scan.hits.size();
  j["usable_hits"] = usable;
  j["hits"] = hits;
  j["entries"] = entries;
  return dump(j);
}

std::string stage1_json(const attacks::Stage1Result& result, const attacks::NonceSearchResult& fixture,
                        const std::optional<Secrets>& secrets) {
  json j;
  j["attack"] = "stage1";
  j["otp_hash"] = to_hex(result.otp_hash);
  j["fixture"] = {{"nonce", to_hex(fixture.nonce)},
                  {"nonce_trials", fixture.trials},
                  {"expected_trials", fixture.expected_trials},
                  {"wrong_key_entry_word", hex32(fixture.entry_word)},
                  {"branch_target", hex32(fixture.target)}};
  j["boot"] = boot_object(result.boot);
  j["secrets"] = secrets_json(secrets);
  return dump(j);
}

std::string persist_json(const attacks::PersistPlan& plan, const std::vector<boot::BootReport>& verification_boots,
                         const std::optional<Secrets>& secrets) {
  json j;
  j["attack"] = "persist";
  j["firm0_version"] = plan.big_version;
  j["firm1_version"] = plan.small_version;
  j["firm0_len"] = hex32(static_cast<std::uint32_t>(plan.big_len));
  j["firm1_len"] = hex32(static_cast<std::uint32_t>(plan.small_len));
  j["gap_offset"] = hex32(plan.gap_offset);
  j["sled_begin"] = hex32(plan.sled_begin);
  j["payload_addr"] = hex32(plan.payload_addr);
  j["window"] = {{"lo", hex32(plan.window.lo)}, {"hi", hex32(plan.window.hi)}, {"words", plan.window.words()}};
  j["expected_trials"] = attacks::expected_trials(plan.window);
  j["key2"] = to_hex(plan.search.key);
  j["trials"] = plan.search.trials;
  j["entry_word"] = hex32(plan.search.entry_word);
  j["branch_target"] = hex32(plan.search.target);
  json boots = json::array();
  for (const auto& b : verification_boots) boots.push_back(outcome_json(b.outcome));
  j["verification_boots"] = boots;
  j["secrets"] = secrets_json(secrets);
  return dump(j);
}

}  // namespace bootshuffle::report
