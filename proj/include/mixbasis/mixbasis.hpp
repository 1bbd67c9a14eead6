#pragma once

#include "analysis.hpp"
#include "basis.hpp"
#include "data.hpp"
#include "em.hpp"
#include "error.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "synth.hpp"
