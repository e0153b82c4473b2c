#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace immac::cli {

enum class Subcommand { fig3, fig4, fig5, fig6, fig7, fig8, fig9, usd_table, bounds, verify };
enum class Format { csv, json };

std::string to_string(Subcommand s);

struct AlphaRange {
    double min = 0.0;
    double max = 0.0;
    std::size_t steps = 121;
};

struct RunConfig {
    Subcommand subcommand = Subcommand::verify;
    std::optional<double> g;
    std::optional<std::size_t> N;
    std::vector<std::size_t> M;
    std::vector<std::size_t> k;
    std::optional<AlphaRange> alpha;
    std::vector<double> alpha_values;  // fig7 panels
    std::vector<double> alpha2;        // fig4 fixed-alpha^2 panel
    std::vector<double> eps;
    std::optional<std::size_t> cutoff;
    std::filesystem::path out_dir = ".";
    Format format = Format::csv;

    /// Throws UsageError on empty ranges, steps < 2 and similar.
    void validate() const;
    /// key=value pairs echoed into every dataset header.
    std::vector<std::pair<std::string, std::string>> echo() const;
};

using Cell = std::variant<double, std::string>;

struct Dataset {
    std::string name;  // file stem
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct RunResult {
    std::vector<Dataset> datasets;
    bool verify_ok = true;
};

/// Pure part of a run: every dataset the subcommand would write.
RunResult compute(const RunConfig& config);

std::string render_csv(const Dataset& d);
std::string render_json(const Dataset& d);

/// Writes one file per dataset under config.out_dir; throws IoError.
std::vector<std::filesystem::path> write_datasets(const RunResult& result, const RunConfig& config);

/// Exit codes: 0 ok, 1 verification failure, 2 usage, 3 I/O.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv (CLI11) and runs. The IMMAC_OUT_DIR environment variable
/// supplies the output directory when --out is absent.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace immac::cli
