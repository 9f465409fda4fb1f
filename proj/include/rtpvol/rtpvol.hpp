#pragma once

#include "rtpvol/agents.hpp"
#include "rtpvol/clearing.hpp"
#include "rtpvol/dynamics.hpp"
#include "rtpvol/elasticity.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/invariance.hpp"
#include "rtpvol/metrics.hpp"
#include "rtpvol/numeric.hpp"
#include "rtpvol/random.hpp"
#include "rtpvol/scaling.hpp"
#include "rtpvol/stability.hpp"
