#pragma once

#include <string>
#include <vector>

#include "lagflow/config.hpp"
#include "lagflow/core.hpp"

namespace lagflow {

struct Recipe {
  std::string name;
  std::string description;
  std::string config_text;
};

// Built-in experiment catalog.  Each entry is a complete config file; 2D runs
// use reduced desk-scale meshes so the whole catalog stays runnable on a
// laptop.
inline const std::vector<Recipe> &recipe_catalog() {
  static const std::vector<Recipe> recipes = {
      {"pme_m2", "porous medium m=2, Barenblatt data, free boundary tracking",
       R"(dimension = 1

[domain]
lo = -1.0
hi = 1.0

[mesh]
n_cells = 501

[initial]
kind = "barenblatt"
mass = 2.0
m = 2.0
t0 = 1e-3

[energy.internal]
kind = "power"
m = 2.0
nu = 1.0
normalization = "over_m_minus_1"

[solver]
dt = 1e-5
t_start = 1e-3
free_boundary = true

[stop]
rule = "horizon"
n_steps = 2000

[output]
directory = "out/pme_m2"
snapshot_every = 10
)"},
      {"pme_m4", "porous medium m=4, Barenblatt data, free boundary tracking",
       R"(dimension = 1

[domain]
lo = -1.0
hi = 1.0

[mesh]
n_cells = 501

[initial]
kind = "barenblatt"
mass = 2.0
m = 4.0
t0 = 1e-3

[energy.internal]
kind = "power"
m = 4.0
nu = 1.0
normalization = "over_m_minus_1"

[solver]
dt = 1e-5
t_start = 1e-3
free_boundary = true

[stop]
rule = "horizon"
n_steps = 2000

[output]
directory = "out/pme_m4"
snapshot_every = 10
)"},
      {"fp_harmonic_m2", "nonlinear Fokker-Planck, harmonic confinement, m=2 nu=2",
       R"(dimension = 1

[domain]
lo = -2.0
hi = 2.0

[mesh]
n_cells = 501

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.2

[energy.internal]
kind = "power"
m = 2.0
nu = 2.0
normalization = "over_m"

[energy.external]
kind = "harmonic"

[solver]
dt = 1e-3

[stop]
rule = "steady"
max_steps = 20000

[output]
directory = "out/fp_harmonic_m2"
snapshot_every = 10
)"},
      {"fp_double_well", "nonlinear Fokker-Planck, double-well confinement, m=2 nu=0.05",
       R"(dimension = 1

[domain]
lo = -2.0
hi = 2.0

[mesh]
n_cells = 501

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.2

[energy.internal]
kind = "power"
m = 2.0
nu = 0.05
normalization = "over_m"

[energy.external]
kind = "double_well"

[solver]
dt = 1e-3

[stop]
rule = "steady"
max_steps = 40000

[output]
directory = "out/fp_double_well"
snapshot_every = 10
)"},
      {"agg_21", "aggregation (a,b) = (2,1): constant steady profile on [-1,1]",
       R"(dimension = 1

[domain]
lo = -2.0
hi = 2.0

[mesh]
n_cells = 201

[initial]
kind = "gaussian"
mass = 4.0
sigma = 0.35

[energy.interaction]
kind = "power_law"
a = 2.0
b = 1.0

[solver]
dt = 1e-3

[stop]
rule = "steady"
max_steps = 20000

[output]
directory = "out/agg_21"
snapshot_every = 10
)"},
      {"agg_20", "aggregation (a,b) = (2,0): semicircle steady profile",
       R"(dimension = 1

[domain]
lo = -6.0
hi = 6.0

[mesh]
n_cells = 501

[initial]
kind = "gaussian"
mass = 1.0
sigma = 1.0

[energy.interaction]
kind = "power_law"
a = 2.0
b = 0.0
log_coefficient = 1.0

[solver]
dt = 1e-3

[stop]
rule = "steady"
max_steps = 20000

[output]
directory = "out/agg_20"
snapshot_every = 10
)"},
      {"ks_subcritical", "modified Keller-Segel, mass 2*pi - 0.1: global diffusion",
       R"(dimension = 1

[domain]
lo = -6.0
hi = 6.0

[mesh]
n_cells = 501

[initial]
kind = "gaussian"
mass = 6.183185307179586
sigma = 1.0

[energy.internal]
kind = "log_entropy"

[energy.interaction]
kind = "log_ks"
chi = 1.0
d = 1

[solver]
dt = 1e-1

[stop]
rule = "horizon"
t_final = 30.0

[output]
directory = "out/ks_subcritical"
snapshot_every = 10
)"},
      {"ks_supercritical", "modified Keller-Segel, mass 2*pi + 0.1: finite-time blow-up",
       R"(dimension = 1

[domain]
lo = -6.0
hi = 6.0

[mesh]
n_cells = 501

[initial]
kind = "gaussian"
mass = 6.383185307179586
sigma = 1.0

[energy.internal]
kind = "log_entropy"

[energy.interaction]
kind = "log_ks"
chi = 1.0
d = 1

[solver]
dt = 1e-1

[stop]
rule = "horizon"
t_final = 30.0

[output]
directory = "out/ks_supercritical"
snapshot_every = 10
)"},
      {"ks_twobump_sub", "Keller-Segel, two subcritical peaks drifting together",
       R"(dimension = 1

[domain]
lo = -5.0
hi = 5.0

[mesh]
n_cells = 301

[initial]
kind = "gaussian_sum"
mass = 11.966370614359172
masses = [5.783185307179586, 6.183185307179586]
centers = [-2.0, 2.0]
sigmas = [0.040824829046386304, 0.040824829046386304]

[energy.internal]
kind = "log_entropy"

[energy.interaction]
kind = "log_ks"
chi = 1.0
d = 1

[solver]
dt = 1e-3

[stop]
rule = "horizon"
t_final = 1.8

[output]
directory = "out/ks_twobump_sub"
snapshot_every = 10
)"},
      {"ks_twobump_super", "Keller-Segel, one supercritical peak: blow-up at that peak",
       R"(dimension = 1

[domain]
lo = -5.0
hi = 5.0

[mesh]
n_cells = 301

[initial]
kind = "gaussian_sum"
mass = 12.166370614359172
masses = [5.783185307179586, 6.383185307179586]
centers = [-2.0, 2.0]
sigmas = [0.040824829046386304, 0.040824829046386304]

[energy.internal]
kind = "log_entropy"

[energy.interaction]
kind = "log_ks"
chi = 1.0
d = 1

[solver]
dt = 1e-4

[stop]
rule = "horizon"
t_final = 1.0

[output]
directory = "out/ks_twobump_super"
snapshot_every = 10
)"},
      {"ks_blowup_profile", "Keller-Segel blow-up profile study: picked Gaussian, tiny steps",
       R"(dimension = 1

[domain]
lo = -0.1
hi = 0.1

[mesh]
n_cells = 1200

[initial]
kind = "gaussian"
mass = 6.383185307179586
sigma = 0.0022360679774997896

[energy.internal]
kind = "log_entropy"

[energy.interaction]
kind = "log_ks"
chi = 1.0
d = 1

[solver]
dt = 1e-9

[stop]
rule = "horizon"
t_final = 1e-5

[output]
directory = "out/ks_blowup_profile"
snapshot_every = 10
)"},
      {"attract_2d", "2D harmonic attraction on the unit disk: Dirac formation at the center",
       R"(dimension = 2

[domain]
shape = "disk"
radius = 1.0

[mesh]
n_rings = 24

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.3

[energy.interaction]
kind = "power_law"
a = 2.0
b = 0.0
log_coefficient = 0.0

[solver]
dt = 1e-2

[stop]
rule = "horizon"
t_final = 1.5

[output]
directory = "out/attract_2d"
snapshot_every = 1
)"},
      {"ring_42_2d", "2D attraction-repulsion (4,2): concentration on a ring",
       R"(dimension = 2

[domain]
shape = "disk"
radius = 1.0

[mesh]
n_rings = 14

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.3

[energy.interaction]
kind = "power_law"
a = 4.0
b = 2.0

[solver]
dt = 1e-2

[stop]
rule = "horizon"
t_final = 3.0

[output]
directory = "out/ring_42_2d"
snapshot_every = 1
)"},
      {"circle_20_2d", "2D attraction with Newtonian log repulsion: uniform bump",
       R"(dimension = 2

[domain]
shape = "disk"
radius = 1.0

[mesh]
n_rings = 14

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.3

[energy.interaction]
kind = "power_law"
a = 2.0
b = 0.0
log_coefficient = 0.15915494309189535

[solver]
dt = 1e-2

[stop]
rule = "horizon"
t_final = 3.0

[output]
directory = "out/circle_20_2d"
snapshot_every = 1
)"},
      {"mill_2d", "2D mill: log repulsion plus -(alpha/beta) ln r confinement, annulus steady state",
       R"(dimension = 2

[domain]
shape = "disk"
radius = 1.0

[mesh]
n_rings = 14

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.3

[energy.external]
kind = "log_radial"
alpha = 1.0
beta = 4.0

[energy.interaction]
kind = "power_law"
a = 2.0
b = 0.0
log_coefficient = 0.15915494309189535

[solver]
dt = 1e-2

[stop]
rule = "horizon"
t_final = 3.0

[output]
directory = "out/mill_2d"
snapshot_every = 1
)"},
      {"agg_20_2d", "2D (2,0) aggregation from a non-radial two-Gaussian datum",
       R"(dimension = 2

[domain]
shape = "disk"
radius = 1.0

[mesh]
n_rings = 14

[initial]
kind = "gaussian_sum"
mass = 1.0
weights = [0.5, 0.5]
centers_x = [0.15, -0.3]
centers_y = [0.25, -0.4]
sigmas = [0.25, 0.2]

[energy.interaction]
kind = "power_law"
a = 2.0
b = 0.0
log_coefficient = 1.0

[solver]
dt = 1e-2

[stop]
rule = "horizon"
t_final = 2.0

[output]
directory = "out/agg_20_2d"
snapshot_every = 1
)"},
      {"ks_2d", "2D modified Keller-Segel, chi = 1.1 * 8 pi: supercritical collapse",
       R"(dimension = 2

[domain]
shape = "disk"
radius = 1.0

[mesh]
n_rings = 14

[initial]
kind = "gaussian"
mass = 1.0
sigma = 0.3

[energy.internal]
kind = "log_entropy"

[energy.interaction]
kind = "log_ks"
chi = 27.64601535159018
d = 2

[solver]
dt = 5e-3

[stop]
rule = "horizon"
t_final = 1.0

[output]
directory = "out/ks_2d"
snapshot_every = 1
)"},
  };
  return recipes;
}

inline const Recipe &find_recipe(const std::string &name) {
  for (const auto &r : recipe_catalog())
    if (r.name == name) return r;
  throw InvalidSpecError("unknown recipe '" + name + "'");
}

inline RunConfig recipe_config(const std::string &name) {
  return load_run_config(find_recipe(name).config_text);
}

} // namespace lagflow
