#include "bytes.hpp"

#include <fstream>
#include <sstream>

namespace jtr::bytes {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoFailure, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) raise(ErrorCode::IoFailure, "read failed for " + path);
    return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out) raise(ErrorCode::IoFailure, "write failed for " + path);
}

} // namespace jtr::bytes
