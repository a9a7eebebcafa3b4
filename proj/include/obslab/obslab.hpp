#pragma once

#include "obslab/common.hpp"
#include "obslab/duality.hpp"
#include "obslab/estimates.hpp"
#include "obslab/fft.hpp"
#include "obslab/grid.hpp"
#include "obslab/linalg.hpp"
#include "obslab/parallel.hpp"
#include "obslab/report.hpp"
#include "obslab/rng.hpp"
#include "obslab/semigroups.hpp"
#include "obslab/simplex.hpp"
#include "obslab/spectral.hpp"
#include "obslab/version.hpp"
