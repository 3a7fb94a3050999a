// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/cli.hpp"

int main(int argc, char** argv) { return isax::cli::run(argc, argv); }
