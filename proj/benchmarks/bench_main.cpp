#include "bootshuffle/attacks.hpp"
#include "bootshuffle/bootchain.hpp"
#include "bootshuffle/crypto.hpp"
#include "bootshuffle/vendor.hpp"

#include <benchmark/benchmark.h>

using namespace bootshuffle;

namespace {

const VendorWorld& world() {
  static const VendorWorld w = VendorWorld::generate();
  return w;
}

void BM_CtrThroughput(benchmark::State& state) {
  const Bytes data(static_cast<std::size_t>(state.range(0)), 0xA5);
  const Key key = filled_block(0x11);
  const Block nonce = filled_block(0x22);
  for (auto _ : state) benchmark::DoNotOptimize(crypto::ctr(key, nonce, data));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_CtrThroughput)->Arg(0x1000)->Arg(0x40000);

void BM_EntryWordUnderKey(benchmark::State& state) {
  const FirmImage image = world().build_release("10.2.0");
  const attacks::CandidateStream stream(1);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(attacks::entry_word_under_key(image, stream.at(i++)));
}
BENCHMARK(BM_EntryWordUnderKey);

void BM_BruteforceBranchKey(benchmark::State& state) {
  const FirmImage image = world().build_release("10.2.0");
  const Address lo = kFirmLoadBase + 0x48000;
  const attacks::Window w{lo, lo + (1u << 18)};
  attacks::SearchOptions o;
  o.workers = static_cast<unsigned>(state.range(0));
  std::uint64_t trials = 0;
  for (auto _ : state) {
    o.seed = trials;
    trials += attacks::bruteforce_branch_key(image, w, o).trials;
  }
  state.counters["trials/s"] = benchmark::Counter(static_cast<double>(trials), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_BruteforceBranchKey)->Arg(1)->Arg(4)->UseRealTime();

void BM_NopSledExec(benchmark::State& state) {
  Console c = provision_console(world(), 1);
  const Address start = 0x08100000;
  const auto words = static_cast<std::uint32_t>(state.range(0));
  for (std::uint32_t i = 0; i < words; ++i) c.memory().write_word(start + 4 * i, arm::kNopWord);
  c.memory().add_hook({start + 4 * words, start + 4 * words + 4, host_call::kDumpShaLatch});
  for (auto _ : state) benchmark::DoNotOptimize(boot::micro_exec(c, start));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * words);
}
BENCHMARK(BM_NopSledExec)->Arg(0x400)->Arg(0x10000);

void BM_HonestBoot(benchmark::State& state) {
  Console c = provision_console(world(), 2);
  for (auto _ : state) {
    c.reboot(RebootMode::Warm);
    benchmark::DoNotOptimize(boot::boot_rom_run(c));
  }
}
BENCHMARK(BM_HonestBoot);

void BM_CraftVulnerableBuild(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(attacks::craft_vulnerable_build(world()));
}
BENCHMARK(BM_CraftVulnerableBuild)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
