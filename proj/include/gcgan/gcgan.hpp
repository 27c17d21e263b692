#pragma once

// Umbrella header: the full library surface.

#include "gcgan/autodiff.hpp"
#include "gcgan/buffer.hpp"
#include "gcgan/checkpoint.hpp"
#include "gcgan/config.hpp"
#include "gcgan/conv_ops.hpp"
#include "gcgan/data.hpp"
#include "gcgan/error.hpp"
#include "gcgan/eval.hpp"
#include "gcgan/image.hpp"
#include "gcgan/losses.hpp"
#include "gcgan/models.hpp"
#include "gcgan/nn.hpp"
#include "gcgan/optim.hpp"
#include "gcgan/rng.hpp"
#include "gcgan/tensor.hpp"
#include "gcgan/toy.hpp"
#include "gcgan/training.hpp"
#include "gcgan/transforms.hpp"
#include "gcgan/version.hpp"
