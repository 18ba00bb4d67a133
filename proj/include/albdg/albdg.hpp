#pragma once

#include "albdg/error.hpp"
#include "albdg/parallel.hpp"
#include "albdg/grid.hpp"
#include "albdg/lgl.hpp"
#include "albdg/mesh.hpp"
#include "albdg/spectral.hpp"
#include "albdg/basis.hpp"
#include "albdg/dg_operator.hpp"
#include "albdg/eigensolver.hpp"
#include "albdg/estimator.hpp"
#include "albdg/model_problem.hpp"
#include "albdg/refinement.hpp"
#include "albdg/properties.hpp"
#include "albdg/config.hpp"
#include "albdg/io.hpp"
#include "albdg/commands.hpp"
