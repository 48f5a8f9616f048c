// Copyright 2026 The otcost Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "otcost/common.h"

namespace otcost::privacy {

struct AttackResult {
  double alignment = 0.0;  // mean cosine of principal angles, in [0, 1]
  int k = 0;
  double rho = 0.0;  // budget that produced the noisy matrix, if known
};

// Spectral reconstruction attempt: compares the top-k eigenvectors of a
// released (noisy) second-moment matrix against those of the true Gram
// matrix H^T H of row-normalized activations.
AttackResult svd_reconstruction_attack(const Matrix& noisy_cov, const Matrix& true_h, int k,
                                       double rho = 0.0);

// H~^T H~ + E for row-normalized H, with E the symmetric Gaussian-mechanism
// noise of a Frobenius-sensitivity-2 release at budget rho.
Matrix noisy_gram(const Matrix& h, double rho, uint64_t seed);

// Mean cosine of the principal angles between span(u) and span(v); both
// inputs have orthonormal columns.
double subspace_alignment(const Matrix& u, const Matrix& v);

}  // namespace otcost::privacy
