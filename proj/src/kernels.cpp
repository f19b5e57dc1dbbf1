// Copyright 2026 The pmuforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmuforge/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace pmuforge::kernels {

namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::axpy, &scalar::sum,
                                   &scalar::sum_squared_deviation, &scalar::shift_scale};

#if defined(PMUFORGE_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::sum,
                                 &avx2::sum_squared_deviation, &avx2::shift_scale};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

Backend detect_backend() {
  if (const char* forced = std::getenv("PMUFORGE_KERNELS"); forced != nullptr) {
    if (std::string(forced) == "scalar") return Backend::Scalar;
  }
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  return Backend::Scalar;
}

struct Dispatch {
  Backend backend = detect_backend();
  const KernelTable* active = &table(backend);
};

Dispatch& dispatch() {
  static Dispatch instance;
  return instance;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("kernel operands differ in length: " + std::to_string(a) +
                                " vs " + std::to_string(b));
  }
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(PMUFORGE_HAVE_AVX2)
      return cpu_has_avx2();
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
#if defined(PMUFORGE_HAVE_AVX2)
  if (backend == Backend::Avx2) return kAvx2Table;
#endif
  if (backend != Backend::Scalar) throw std::invalid_argument("kernel backend not compiled in");
  return kScalarTable;
}

Backend active_backend() { return dispatch().backend; }

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument("kernel backend unavailable: " + std::string(backend_name(backend)));
  }
  dispatch().backend = backend;
  dispatch().active = &table(backend);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size());
  return dispatch().active->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_lengths(x.size(), y.size());
  dispatch().active->axpy(alpha, x.data(), y.data(), x.size());
}

double sum(std::span<const double> x) { return dispatch().active->sum(x.data(), x.size()); }

double sum_squared_deviation(std::span<const double> x, double center) {
  return dispatch().active->sum_squared_deviation(x.data(), x.size(), center);
}

void shift_scale(std::span<double> x, double shift, double scale) {
  dispatch().active->shift_scale(x.data(), x.size(), shift, scale);
}

}  // namespace pmuforge::kernels
