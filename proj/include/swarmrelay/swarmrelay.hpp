#pragma once

#include "swarmrelay/beamforming.hpp"
#include "swarmrelay/channel.hpp"
#include "swarmrelay/configuration.hpp"
#include "swarmrelay/core.hpp"
#include "swarmrelay/energy.hpp"
#include "swarmrelay/harness.hpp"
#include "swarmrelay/netflow.hpp"
#include "swarmrelay/optimizer.hpp"
#include "swarmrelay/random.hpp"
#include "swarmrelay/scenario.hpp"
