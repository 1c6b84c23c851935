#pragma once

// Umbrella header for the SSPO desk-scale laboratory.

#include "sspo/advantage.hpp"
#include "sspo/checkpoint.hpp"
#include "sspo/config.hpp"
#include "sspo/errors.hpp"
#include "sspo/harness.hpp"
#include "sspo/metrics.hpp"
#include "sspo/policy.hpp"
#include "sspo/probe.hpp"
#include "sspo/rng.hpp"
#include "sspo/rollout.hpp"
#include "sspo/sidecar.hpp"
#include "sspo/taskgen.hpp"
#include "sspo/trace.hpp"
#include "sspo/vocab.hpp"
#include "sspo/vvp.hpp"
