#pragma once

#include "igasd/channel.hpp"
#include "igasd/constellation.hpp"
#include "igasd/exp_family.hpp"
#include "igasd/harness.hpp"
#include "igasd/iga.hpp"
#include "igasd/oracle.hpp"
#include "igasd/rng.hpp"
#include "igasd/types.hpp"
