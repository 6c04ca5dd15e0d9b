#pragma once

#define SFK_VERSION "0.1.0"
