#pragma once

#include "v6forge/address.hpp"
#include "v6forge/asn_cat.hpp"
#include "v6forge/error.hpp"
#include "v6forge/filters.hpp"
#include "v6forge/history.hpp"
#include "v6forge/metrics.hpp"
#include "v6forge/pipeline.hpp"
#include "v6forge/prefix_trie.hpp"
#include "v6forge/rng.hpp"
#include "v6forge/scan_sim.hpp"
#include "v6forge/textio.hpp"
#include "v6forge/tga.hpp"
