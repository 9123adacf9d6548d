#pragma once

#include "mrtk/ce_unet.hpp"
#include "mrtk/config.hpp"
#include "mrtk/context.hpp"
#include "mrtk/core.hpp"
#include "mrtk/degrade.hpp"
#include "mrtk/fft.hpp"
#include "mrtk/io.hpp"
#include "mrtk/metrics.hpp"
#include "mrtk/nn.hpp"
#include "mrtk/pairgen.hpp"
#include "mrtk/phantom.hpp"
#include "mrtk/recon.hpp"
#include "mrtk/rng.hpp"
#include "mrtk/standardize.hpp"
