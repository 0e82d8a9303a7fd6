#include <iostream>

#include "mqa/cli.hpp"

int main(int argc, char** argv) {
  return mqa::cli_main({argv + 1, argv + argc}, std::cout, std::cerr);
}
