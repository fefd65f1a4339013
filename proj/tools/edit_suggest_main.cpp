#include "edit_suggest/cli.hpp"

int main(int argc, char** argv) { return edit_suggest::run(argc, argv); }
