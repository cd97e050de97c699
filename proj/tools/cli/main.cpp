#include "app.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return cbfsafe::cli::main_entry(argc, argv, std::cout, std::cerr);
}
