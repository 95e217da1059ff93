/*
   Copyright 2026 The amswave Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include "amswave/process.hpp"

namespace amswave::models {

/// Drifted Brownian motion dY = mu ds + sigma dW, level y, A = {y <= -1}, start 0.
DiffusionModel bm1d(double mu = -1.0, double sigma = 1.0, double step = 1e-3,
                    std::size_t max_steps = 1'000'000);

/// dY1 = mu ds + dW1, dY2 = dW2, level y1, start (0, 0).
DiffusionModel bm2d(double mu = 0.0, double step = 1e-3, std::size_t max_steps = 1'000'000);

/**
 * Double well in y1 coupled to an Ornstein-Uhlenbeck coordinate:
 * dY1 = (c Y2 - Y1^3 + Y1) ds + dW1, dY2 = -Y2 ds + dW2, level y1.
 * Initial law: y1 = 0, y2 ~ N(0, 1/2) (stationary for the y2 equation).
 */
DiffusionModel coupled2d(double coupling = 2.0, double step = 1e-3,
                         std::size_t max_steps = 1'000'000);

/// Model with no drift and no noise; every path from 0 is censored.
DiffusionModel frozen(std::size_t max_steps = 10);

} // namespace amswave::models
