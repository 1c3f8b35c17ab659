#pragma once

#include "spikelda/common.hpp"
#include "spikelda/core_linalg.hpp"
#include "spikelda/dataio.hpp"
#include "spikelda/diagnostics.hpp"
#include "spikelda/model_io.hpp"
#include "spikelda/pclda.hpp"
#include "spikelda/rng.hpp"
#include "spikelda/simbench.hpp"
#include "spikelda/tuning.hpp"
#include "spikelda/whitening.hpp"
