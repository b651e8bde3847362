#include "meshseq/text_io.hpp"

#include "meshseq/error.hpp"

#include <fstream>
#include <sstream>

namespace meshseq {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

} // namespace meshseq
