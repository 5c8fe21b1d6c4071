#pragma once

// Exploit toolkit: keysector block shuffling, wrong-key entry-word scanning,
// branch-key brute force, SHA_HASH capture through a NOP sled, and the
// FIRM0/FIRM1 residue persistence installer.

#include "bootshuffle/arm.hpp"
#include "bootshuffle/bootchain.hpp"
#include "bootshuffle/console.hpp"
#include "bootshuffle/error.hpp"
#include "bootshuffle/firm.hpp"
#include "bootshuffle/nand.hpp"
#include "bootshuffle/vendor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bootshuffle::attacks {

// --- Keysector shuffling ----------------------------------------------------

/// Moves of whole ciphertext blocks, by 0-based block index (Key #N = N-1).
/// Applied simultaneously against the original sector, so copies are allowed
/// and a swap applied twice is the identity.
struct ShufflePlan {
  std::vector<std::pair<unsigned, unsigned>> moves;  // (source, destination)

  static ShufflePlan identity() { return {}; }
  /// Key #src copied over Key #dst (1-based key numbers).
  static ShufflePlan copy_key(unsigned src_key, unsigned dst_key);
  static ShufflePlan swap_keys(unsigned a_key, unsigned b_key);
};

/// Throws Error(KeyIndexOutOfRange) for an index outside 0..31.
KeysectorBlocks apply_shuffle(const KeysectorBlocks& blocks, const ShufflePlan& plan);

/// Rewrites sector 0x96 in place. Needs no key material at all.
void shuffle_keysector(NandImage& nand, const ShufflePlan& plan);

/// Blockwise AES-128-ECB under the first 16 bytes of the captured OTP hash.
KeysectorBlocks keysector_recrypt(const Digest& otp_hash, crypto::Direction dir, const KeysectorBlocks& blocks);

// --- Search windows and candidate streams -----------------------------------

/// Half-open address range [lo, hi) of acceptable branch targets.
struct Window {
  Address lo = 0;
  Address hi = 0;

  bool contains(Address a) const noexcept { return a >= lo && a < hi; }
  std::uint64_t words() const noexcept { return hi > lo ? (std::uint64_t{hi} - lo + 3) / 4 : 0; }
  bool operator==(const Window&) const = default;
};

/// Expected trials until a uniformly random word is an AL branch landing in
/// `window`: 256 * 2^24 / window_words.
double expected_trials(const Window& window);

struct SearchOptions {
  std::uint64_t seed = 0;
  std::uint64_t max_trials = std::uint64_t{1} << 24;
  unsigned workers = 1;
  /// Stream indices per work unit; results never depend on it.
  std::uint64_t chunk = 4096;
};

/// Seeded counter-mode stream of 16-byte candidates with random access:
/// candidate(i) = AES(seed_key, i).
class CandidateStream {
 public:
  explicit CandidateStream(std::uint64_t seed);
  Block at(std::uint64_t index) const;
  /// Fills out[k] = at(first + k).
  void fill(std::uint64_t first, std::span<Block> out) const;

 private:
  crypto::Aes128 aes_;
};

// --- Scanning the 31 shuffled keys ------------------------------------------

enum class TargetUsability { InRam, OutOfRange };

struct ScanEntry {
  std::string version_label;
  unsigned key_number = 0;
  std::uint32_t entry_word = 0;
  bool operator==(const ScanEntry&) const = default;
};

struct ScanHit {
  std::string version_label;
  unsigned key_number = 0;
  std::uint32_t entry_word = 0;
  arm::Instruction decoded;
  TargetUsability target_usability = TargetUsability::OutOfRange;
  bool operator==(const ScanHit&) const = default;
};

struct ScanReport {
  std::vector<ScanEntry> entries;  // every (build, key != #2) examined
  std::vector<ScanHit> hits;       // entries that decode to a branch
};

struct RamRange {
  Address base = MemoryMap::kDefaultBase;
  std::uint32_t size = MemoryMap::kDefaultSize;
};

/// Harness mode: wrong-key entry words computed from the known keysector
/// plaintext, without booting.
ScanReport scan_shuffled_keys(const KeysectorBlocks& keysector_plaintext, std::span<const FirmImage> builds,
                              RamRange ram = {});

/// Black-box mode: for every build and every key != #2, installs the build,
/// copies that key's ciphertext block over Key #2, boots, and records the
/// entry word the micro-executor fetched. Touches no key material. NAND, RAM
/// and the SHA latch are restored afterwards. v1 builds verify the key they
/// decrypt with, so their shuffled boots panic and record nothing.
ScanReport scan_shuffled_keys_blackbox(Console& console, std::span<const FirmImage> builds);

// --- Fixture generation -----------------------------------------------------

struct NonceSearchResult {
  Block nonce{};
  std::uint64_t trials = 0;
  Address target = 0;
  std::uint32_t entry_word = 0;
  double expected_trials = 0;
};

/// Finds a CTR nonce for which the entry word of `code_plaintext`, encrypted
/// under `genuine_key` and decrypted under `shuffled_key`, is an AL branch
/// into `window`. Throws Error(SearchExhausted).
NonceSearchResult find_vulnerable_nonce(std::span<const Byte> code_plaintext, const Key& shuffled_key,
                                        const Key& genuine_key, std::uint32_t entry_offset, Address entry_pc,
                                        const Window& window, const SearchOptions& options = {});

inline constexpr std::string_view kStage1Release = "10.0.0";
inline constexpr Address kStage1SledAddr = 0x080FD0F8;
inline constexpr std::uint32_t kStage1SledWords = 0x400;

struct VulnerableBuild {
  FirmImage image;
  NonceSearchResult search;
};

/// Signed release of `version_label` (a v2 build) whose entry word, decrypted
/// under Key #1 instead of Key #2, is exactly `B target`. Stands in for the
/// real firmware version the attack depends on.
///
/// The genuine entry word is itself a branch to the firmware-entry stub, so
/// the search only needs a nonce for which that branch lands inside the
/// section: about 256 * 2^24 / section_words trials.
VulnerableBuild craft_vulnerable_build(const VendorWorld& world, std::string_view version_label = kStage1Release,
                                       Address target = kStage1SledAddr, const SearchOptions& options = {});

// --- Brute force ------------------------------------------------------------

struct BruteforceResult {
  Key key{};
  /// 1-based: trials == stream index of the hit + 1.
  std::uint64_t trials = 0;
  Address target = 0;
  std::uint32_t entry_word = 0;
};

/// Draws candidate keys from CandidateStream(seed) and returns the one with
/// the smallest stream index whose decryption of the entry word is an AL
/// branch into `window`. Identical for any worker count.
BruteforceResult bruteforce_branch_key(const FirmImage& image, const Window& window, const SearchOptions& options = {});

/// The entry word `key` would produce for `image` (only one block decrypted).
std::uint32_t entry_word_under_key(const FirmImage& image, const Key& key);

// --- Stage 1: SHA_HASH capture ----------------------------------------------


struct CaptureOptions {
  Address sled_addr = kStage1SledAddr;
  std::uint32_t sled_words = kStage1SledWords;
  RebootMode reboot = RebootMode::Warm;
  bool plant_sled = true;
};

struct Stage1Result {
  Digest otp_hash{};
  boot::BootReport boot;
};

/// Thrown when a scenario boot ends anywhere but in the payload.
class AttackFailed : public Error {
 public:
  AttackFailed(const std::string& detail, boot::BootOutcome outcome)
      : Error(Errc::AttackFailed, detail), outcome_(std::move(outcome)) {}
  const boot::BootOutcome& outcome() const noexcept { return outcome_; }

 private:
  boot::BootOutcome outcome_;
};

/// Installs the vulnerable build, copies Key #1 over Key #2, plants a NOP
/// sled with a SHA_HASH dump hook at its end, reboots and boots.
Stage1Result capture_otp_hash(Console& console, const FirmImage& vulnerable_build, const CaptureOptions& options = {});

// --- Stage 2: persistence ---------------------------------------------------

inline constexpr std::uint32_t kDefaultGapOffset = 0x190;

/// [trap][kInlinePayload][len][payload, zero padded to a word].
Bytes wrap_payload(std::span<const Byte> payload);

struct PersistPlan {
  Window window;  // sled region the branch must land in
  Address sled_begin = 0;
  Address payload_addr = 0;
  std::uint32_t gap_offset = 0;
  std::size_t big_len = 0;
  std::size_t small_len = 0;
  std::string big_version;
  std::string small_version;
  BruteforceResult search;
};

/// Writes big_firm (with sled + payload over its tail) to FIRM0, small_firm to
/// FIRM1, brute-forces a Key #2 whose wrong decryption of small_firm branches
/// into the sled, and installs that key into the keysector encrypted under
/// the captured OTP hash. Throws PreconditionFailed or SearchExhausted.
PersistPlan install_persistence(Console& console, const Digest& otp_hash, const FirmImage& big_firm,
                                const FirmImage& small_firm, std::span<const Byte> payload,
                                std::uint32_t gap_offset = kDefaultGapOffset, const SearchOptions& options = {});

}  // namespace bootshuffle::attacks
