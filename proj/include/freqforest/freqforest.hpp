#pragma once

#include "freqforest/errors.hpp"
#include "freqforest/flow.hpp"
#include "freqforest/forest.hpp"
#include "freqforest/io.hpp"
#include "freqforest/pipeline.hpp"
#include "freqforest/pose.hpp"
#include "freqforest/spectral.hpp"
#include "freqforest/synth.hpp"
#include "freqforest/text.hpp"
