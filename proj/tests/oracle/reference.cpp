#include "reference.hpp"

namespace oracle {

namespace {

std::uint8_t sbox(std::uint8_t x) {
  // Multiplicative inverse in GF(2^8) followed by the affine map.
  auto mul = [](std::uint8_t a, std::uint8_t b) {
    std::uint8_t p = 0;
    for (int i = 0; i < 8; ++i) {
      if (b & 1) p ^= a;
      const bool hi = a & 0x80;
      a = static_cast<std::uint8_t>(a << 1);
      if (hi) a ^= 0x1B;
      b >>= 1;
    }
    return p;
  };
  std::uint8_t inv = 0;
  if (x != 0) {
    // x^254 = x^-1
    std::uint8_t r = 1, base = x;
    for (int e = 254; e > 0; e >>= 1) {
      if (e & 1) r = mul(r, base);
      base = mul(base, base);
    }
    inv = r;
  }
  auto rotl = [](std::uint8_t v, int s) { return static_cast<std::uint8_t>((v << s) | (v >> (8 - s))); };
  return static_cast<std::uint8_t>(inv ^ rotl(inv, 1) ^ rotl(inv, 2) ^ rotl(inv, 3) ^ rotl(inv, 4) ^ 0x63);
}

const std::array<std::uint8_t, 256>& sbox_table() {
  static const auto table = [] {
    std::array<std::uint8_t, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = sbox(static_cast<std::uint8_t>(i));
    return t;
  }();
  return table;
}

std::uint8_t xtime(std::uint8_t a) { return static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1B : 0)); }

}  // namespace

RefAes128::RefAes128(const Block& key) {
  const auto& s = sbox_table();
  std::array<std::uint8_t, 176> w{};
  for (int i = 0; i < 16; ++i) w[i] = key[i];
  std::uint8_t rcon = 1;
  for (int i = 16; i < 176; i += 4) {
    std::uint8_t t[4] = {w[i - 4], w[i - 3], w[i - 2], w[i - 1]};
    if (i % 16 == 0) {
      const std::uint8_t first = t[0];
      t[0] = static_cast<std::uint8_t>(s[t[1]] ^ rcon);
      t[1] = s[t[2]];
      t[2] = s[t[3]];
      t[3] = s[first];
      rcon = xtime(rcon);
    }
    for (int j = 0; j < 4; ++j) w[i + j] = static_cast<std::uint8_t>(w[i - 16 + j] ^ t[j]);
  }
  for (int r = 0; r < 11; ++r)
    for (int j = 0; j < 16; ++j) round_keys_[r][j] = w[16 * r + j];
}

Block RefAes128::encrypt(const Block& in) const {
  const auto& s = sbox_table();
  Block st = in;
  auto add_key = [&](int r) {
    for (int j = 0; j < 16; ++j) st[j] ^= round_keys_[r][j];
  };
  add_key(0);
  for (int round = 1; round <= 10; ++round) {
    for (auto& b : st) b = s[b];
    // ShiftRows: state is column-major, byte (row r, col c) at 4c + r.
    Block t = st;
    for (int r = 1; r < 4; ++r)
      for (int c = 0; c < 4; ++c) st[4 * c + r] = t[4 * ((c + r) % 4) + r];
    if (round != 10) {
      for (int c = 0; c < 4; ++c) {
        std::uint8_t* col = &st[4 * c];
        const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
        const std::uint8_t all = a0 ^ a1 ^ a2 ^ a3;
        col[0] = static_cast<std::uint8_t>(a0 ^ all ^ xtime(a0 ^ a1));
        col[1] = static_cast<std::uint8_t>(a1 ^ all ^ xtime(a1 ^ a2));
        col[2] = static_cast<std::uint8_t>(a2 ^ all ^ xtime(a2 ^ a3));
        col[3] = static_cast<std::uint8_t>(a3 ^ all ^ xtime(a3 ^ a0));
      }
    }
    add_key(round);
  }
  return st;
}

Block counter_plus(Block counter, std::uint64_t n) {
  unsigned carry = 0;
  for (int i = 15; i >= 0; --i) {
    const unsigned add = i >= 8 ? static_cast<unsigned>((n >> (8 * (15 - i))) & 0xFF) : 0;
    const unsigned sum = counter[i] + add + carry;
    counter[i] = static_cast<std::uint8_t>(sum);
    carry = sum >> 8;
  }
  return counter;
}

std::vector<std::uint8_t> ref_ctr(const Block& key, const Block& nonce, std::span<const std::uint8_t> data,
                                  std::uint64_t first_block) {
  const RefAes128 aes(key);
  std::vector<std::uint8_t> out(data.begin(), data.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 16 == 0) {
      const Block ks = aes.encrypt(counter_plus(nonce, first_block + i / 16));
      for (std::size_t j = 0; j < 16 && i + j < out.size(); ++j) out[i + j] ^= ks[j];
    }
  }
  return out;
}

Digest ref_sha256(std::span<const std::uint8_t> data) {
  static constexpr std::uint32_t k[64] = {
      0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
      0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
      0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
      0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
      0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
      0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
      0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
      0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::vector<std::uint8_t> msg(data.begin(), data.end());
  const std::uint64_t bits = static_cast<std::uint64_t>(data.size()) * 8;
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0);
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));

  auto rotr = [](std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); };
  for (std::size_t off = 0; off < msg.size(); off += 64) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t{msg[off + 4 * i]} << 24) | (std::uint32_t{msg[off + 4 * i + 1]} << 16) |
             (std::uint32_t{msg[off + 4 * i + 2]} << 8) | msg[off + 4 * i + 3];
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t t1 = hh + (rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25)) + ((e & f) ^ (~e & g)) + k[i] + w[i];
      const std::uint32_t t2 = (rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22)) + ((a & b) ^ (a & c) ^ (b & c));
      hh = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
    h[5] += f;
    h[6] += g;
    h[7] += hh;
  }
  Digest out{};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j) out[4 * i + j] = static_cast<std::uint8_t>(h[i] >> (24 - 8 * j));
  return out;
}

RefBranch ref_decode_branch(std::uint32_t word, std::uint32_t pc) {
  const std::uint32_t cond = word >> 28;
  const std::uint32_t op = (word >> 24) & 0xF;  // 101L
  if (cond != 0xE || op != 0xA) return {false, 0};
  std::int64_t imm = word & 0x00FFFFFF;
  if (imm >= 0x800000) imm -= 0x1000000;
  return {true, static_cast<std::uint32_t>(std::int64_t{pc} + 8 + imm * 4)};
}

}  // namespace oracle
