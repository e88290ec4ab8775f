#pragma once

#include "error.hpp"
#include "geometry.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "quadrature.hpp"
#include "fe_space.hpp"
#include "sparse.hpp"
#include "assembly.hpp"
#include "uc_solver.hpp"
#include "config.hpp"
#include "analysis/exponents.hpp"
#include "analysis/harmonic.hpp"
#include "analysis/rates.hpp"
#include "analysis/studies.hpp"
#include "analysis/report_io.hpp"
#include "cli.hpp"
