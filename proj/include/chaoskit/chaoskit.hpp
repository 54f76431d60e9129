#pragma once

// Everything: tensors, chaos algebra, Malliavin matrices, Monte Carlo, JSON io.

#include "chaoskit/chaos.hpp"
#include "chaoskit/combinatorics.hpp"
#include "chaoskit/io.hpp"
#include "chaoskit/malliavin.hpp"
#include "chaoskit/mc.hpp"
#include "chaoskit/random.hpp"
#include "chaoskit/tensor.hpp"
#include "chaoskit/verify.hpp"
