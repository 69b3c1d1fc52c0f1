#pragma once

// Umbrella header for the METS library.

#include "mets/core.hpp"
#include "mets/geodesics.hpp"
#include "mets/isomap.hpp"
#include "mets/extension.hpp"
#include "mets/baselines.hpp"
#include "mets/corruption.hpp"
#include "mets/evaluation.hpp"
#include "mets/dataio.hpp"
#include "mets/synth.hpp"
#include "mets/config.hpp"
