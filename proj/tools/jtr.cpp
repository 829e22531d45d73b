#include "jtr/pipeline.hpp"

int main(int argc, char** argv) { return jtr::run_command(argc, argv); }
