#pragma once

#include "twsim/phold.hpp"
#include "twsim/trace.hpp"

namespace twsim
{
    // Classic single-FEL simulation of cfg: pop the lowest event, execute it,
    // schedule what it emits, until the next event is at or past end_time.
    // Same model code and RNG streams as the Time Warp engine. In PerLp mode
    // one shared stream per LP of the cfg.lps block partition is kept, so the
    // result matches a Time Warp run with that many LPs.
    Trace run_sequential(const PholdConfig &cfg);
}
