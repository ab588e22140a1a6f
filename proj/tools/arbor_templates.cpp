// Writes the built-in procedural template library as STL files plus a
// library.json manifest, for use with `arbor tree --lib`.

#include "arbor/mesh_library.hpp"
#include "arbor/templates.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Export the built-in tree template library"};
  std::string out = "library";
  std::string format = "binary";
  app.add_option("out", out, "Output directory");
  app.add_option("--format", format)->check(CLI::IsMember({"binary", "ascii"}));
  CLI11_PARSE(app, argc, argv);

  try {
    arbor::save_mesh_library(arbor::builtin_mesh_library(), out,
                             format == "ascii" ? arbor::StlFormat::ascii : arbor::StlFormat::binary);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  std::cout << "library=" << out << "/library.json\n";
  return 0;
}
