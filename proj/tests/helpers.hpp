#pragma once

#include "cfsafe/model.hpp"
#include "cfsafe/prism.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace testutil {

inline std::string asset_path(const std::string& name) {
    return std::string(CFSAFE_ASSET_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
    return std::string(CFSAFE_GOLDEN_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), "cannot open ", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE_MESSAGE(bool(out), "cannot write ", path);
    out << text;
}

inline cfsafe::Mdp parse_ok(const std::string& text) {
    cfsafe::ParseResult result = cfsafe::parse_model({text, "<test>"});
    for (const auto& d : result.diagnostics) {
        MESSAGE("diagnostic ", d.line, ":", d.column, ": ", d.message);
    }
    REQUIRE(result.ok());
    return std::move(*result.mdp);
}

inline cfsafe::Mdp load_asset_model(const std::string& name) {
    cfsafe::ParseResult result = cfsafe::parse_model(cfsafe::ModelSource::from_file(asset_path(name)));
    for (const auto& d : result.diagnostics) {
        MESSAGE("diagnostic ", d.line, ":", d.column, ": ", d.message);
    }
    REQUIRE(result.ok());
    return std::move(*result.mdp);
}

// Unique scratch directory, removed when the test is done with it.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "cfsafe-test-XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        REQUIRE(::mkdtemp(buf.data()) != nullptr);
        path = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += "'";
    return out;
}

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the command-line binary with both streams captured. `set_env` entries
// are exported for the child; `unset_env` names are removed from its
// environment.
inline CmdResult run_cli(const std::vector<std::string>& args,
                         const std::vector<std::pair<std::string, std::string>>& set_env = {},
                         const std::vector<std::string>& unset_env = {}) {
    TempDir scratch;
    std::string err_path = scratch.file("stderr.txt");

    std::string cmd = "env";
    for (const auto& name : unset_env) cmd += " -u " + shell_quote(name);
    for (const auto& [name, value] : set_env) cmd += " " + shell_quote(name + "=" + value);
    cmd += " " + shell_quote(CFSAFE_BIN_PATH);
    for (const auto& arg : args) cmd += " " + shell_quote(arg);
    cmd += " 2>" + shell_quote(err_path);

    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult result;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.out.append(buf, n);
    int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.err = read_file(err_path);
    return result;
}

}  // namespace testutil
