#include <string>
#include <vector>

#include "rslam/app.hpp"

int main(int argc, char** argv) {
  return rslam::run_cli(std::vector<std::string>(argv, argv + argc));
}
