#pragma once

#include "lagflow/config.hpp"
#include "lagflow/core.hpp"
#include "lagflow/density_recon.hpp"
#include "lagflow/diagnostics.hpp"
#include "lagflow/init_map.hpp"
#include "lagflow/io.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/potentials.hpp"
#include "lagflow/quadrature.hpp"
#include "lagflow/recipes.hpp"
#include "lagflow/run.hpp"
#include "lagflow/solver1d.hpp"
#include "lagflow/solver2d.hpp"
