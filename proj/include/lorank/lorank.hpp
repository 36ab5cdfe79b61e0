#pragma once

// Umbrella header for the LoRA rank-transformation toolkit.

#include "lorank/checkpoint.hpp"
#include "lorank/errors.hpp"
#include "lorank/flops.hpp"
#include "lorank/lora.hpp"
#include "lorank/matrix.hpp"
#include "lorank/qr.hpp"
#include "lorank/retention.hpp"
#include "lorank/rng.hpp"
#include "lorank/rsvd.hpp"
#include "lorank/schedule.hpp"
#include "lorank/squeeze.hpp"
#include "lorank/svd.hpp"
#include "lorank/trainer.hpp"
