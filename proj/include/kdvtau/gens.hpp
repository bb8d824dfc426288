#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kdvtau {

/// Generator families of the graded polynomial algebra.
///
///   A_i (i >= 1)  degree 2i+1   off-diagonal resolvent coefficients
///   B_i (i >= 1)  degree 2i     upper-right resolvent coefficients
///   C_i (i >= 1)  degree 2i     lower-left resolvent coefficients
///   U_s (s >= 0)  degree s+2    jet symbols: s-th x-derivative of the potential
///   Q_i (i >= 1)  degree 2i     spectral-polynomial coefficients kept as formal symbols
enum class Fam : uint8_t { A = 0, B = 1, C = 2, U = 3, Q = 4 };

constexpr uint32_t gen_key(Fam f, uint32_t idx) { return (uint32_t(f) << 24) | idx; }

constexpr Fam key_fam(uint32_t k) { return Fam(k >> 24); }
constexpr uint32_t key_idx(uint32_t k) { return k & 0xFFFFFFu; }

constexpr uint32_t GA(uint32_t i) { return gen_key(Fam::A, i); }
constexpr uint32_t GB(uint32_t i) { return gen_key(Fam::B, i); }
constexpr uint32_t GC(uint32_t i) { return gen_key(Fam::C, i); }
constexpr uint32_t GU(uint32_t s) { return gen_key(Fam::U, s); }
constexpr uint32_t GQ(uint32_t i) { return gen_key(Fam::Q, i); }

inline int gen_degree(uint32_t k) {
  uint32_t i = key_idx(k);
  switch (key_fam(k)) {
    case Fam::A:
      return 2 * int(i) + 1;
    case Fam::B:
    case Fam::C:
    case Fam::Q:
      return 2 * int(i);
    case Fam::U:
      return int(i) + 2;
  }
  throw std::logic_error("gen_degree: bad key");
}

inline std::string gen_name(uint32_t k) {
  uint32_t i = key_idx(k);
  switch (key_fam(k)) {
    case Fam::A:
      return "a" + std::to_string(i);
    case Fam::B:
      return "b" + std::to_string(i);
    case Fam::C:
      return "c" + std::to_string(i);
    case Fam::U:
      return "u" + std::to_string(i);
    case Fam::Q:
      return "q" + std::to_string(i);
  }
  throw std::logic_error("gen_name: bad key");
}

}  // namespace kdvtau
