#pragma once

#include "rails/covariance_analysis.hpp"
#include "rails/dense_lyap.hpp"
#include "rails/error.hpp"
#include "rails/lanczos.hpp"
#include "rails/low_rank.hpp"
#include "rails/matrix_core.hpp"
#include "rails/matrix_market.hpp"
#include "rails/operators.hpp"
#include "rails/orthonormalize.hpp"
#include "rails/report_io.hpp"
#include "rails/schur_dae.hpp"
#include "rails/sde_oracle.hpp"
#include "rails/solver.hpp"
#include "rails/testproblems.hpp"
