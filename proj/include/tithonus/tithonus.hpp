#pragma once

#include "tithonus/archive.hpp"
#include "tithonus/bytes.hpp"
#include "tithonus/chaining.hpp"
#include "tithonus/costmodel.hpp"
#include "tithonus/ec.hpp"
#include "tithonus/embedding.hpp"
#include "tithonus/errors.hpp"
#include "tithonus/fetch.hpp"
#include "tithonus/hash.hpp"
#include "tithonus/kvconfig.hpp"
#include "tithonus/rijndael.hpp"
#include "tithonus/rng.hpp"
#include "tithonus/security.hpp"
#include "tithonus/signing.hpp"
#include "tithonus/simnet.hpp"
#include "tithonus/transport.hpp"
#include "tithonus/txmodel.hpp"
#include "tithonus/u256.hpp"
#include "tithonus/wallet.hpp"
