#pragma once

#include "privsvm/biometric.hpp"
#include "privsvm/errors.hpp"
#include "privsvm/kernels.hpp"
#include "privsvm/persistence.hpp"
#include "privsvm/prng.hpp"
#include "privsvm/svm.hpp"
#include "privsvm/synth.hpp"
#include "privsvm/transform.hpp"
