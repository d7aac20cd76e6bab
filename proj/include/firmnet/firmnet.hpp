#pragma once

// Umbrella header: pulls in the whole library.

#include "firmnet/attenuation.hpp"
#include "firmnet/counterfactual.hpp"
#include "firmnet/csr.hpp"
#include "firmnet/errors.hpp"
#include "firmnet/estimation.hpp"
#include "firmnet/io.hpp"
#include "firmnet/model.hpp"
#include "firmnet/network_stats.hpp"
#include "firmnet/panel.hpp"
#include "firmnet/params.hpp"
#include "firmnet/rng.hpp"
#include "firmnet/spectral.hpp"
#include "firmnet/synthetic.hpp"
