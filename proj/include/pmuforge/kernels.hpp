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

#pragma once

// Dense inner-loop kernels used by the decomposition, synthesis and audit
// stages. Every kernel has a portable scalar reference implementation and,
// on x86-64, an AVX2/FMA variant. The variant is chosen once at startup
// from CPUID; PMUFORGE_KERNELS=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace pmuforge::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend backend);

// Whether `backend` was compiled in and the running CPU supports it.
bool backend_available(Backend backend);

Backend active_backend();

// Switches the process-wide backend. Not thread-safe; intended for tests and
// benchmarks. Throws std::invalid_argument if the backend is unavailable.
void set_backend(Backend backend);

/// Sum of a[i] * b[i]. Spans must have equal length.
double dot(std::span<const double> a, std::span<const double> b);

/// y[i] += alpha * x[i].
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double sum(std::span<const double> x);

/// Sum of (x[i] - center)^2.
double sum_squared_deviation(std::span<const double> x, double center);

/// x[i] = (x[i] - shift) * scale.
void shift_scale(std::span<double> x, double shift, double scale);

// Raw-pointer entry points for each backend, exposed so the equivalence
// tests can run both variants side by side.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sum_squared_deviation)(const double*, std::size_t, double);
  void (*shift_scale)(double*, std::size_t, double, double);
};

const KernelTable& table(Backend backend);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squared_deviation(const double* x, std::size_t n, double center);
void shift_scale(double* x, std::size_t n, double shift, double scale);
}  // namespace scalar

#if defined(PMUFORGE_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squared_deviation(const double* x, std::size_t n, double center);
void shift_scale(double* x, std::size_t n, double shift, double scale);
}  // namespace avx2
#endif

}  // namespace pmuforge::kernels
