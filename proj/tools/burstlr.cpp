// SPDX-License-Identifier: Apache-2.0
#include "burstlr/cli.hpp"

int main(int argc, char** argv) { return burstlr::run_cli(argc, argv); }
