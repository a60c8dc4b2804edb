#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pmd {

std::string version();

// Flat key=value configuration. Lines starting with '#' are comments.
class RunConfig {
public:
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    // "key=value"
    void apply(const std::string& assignment);
    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    std::vector<double> numbers(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const { return kv_; }

    // Sorted key=value lines; parse(text()) round-trips.
    std::string text() const;
    void save(const std::string& path) const;

private:
    std::map<std::string, std::string> kv_;
};

struct Criterion {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Report {
    std::string id;
    std::vector<Criterion> criteria;
    std::vector<std::string> artifacts;  // paths of written CSVs
    std::vector<std::string> notes;
    double seconds = 0;

    bool passed() const;
    const Criterion& criterion(const std::string& name) const;
    std::string text() const;
};

struct ExperimentInfo {
    std::string id;
    std::string title;
};

const std::vector<ExperimentInfo>& experiment_list();
std::string list_experiments();
// Default configuration of an experiment (throws on an unknown id).
RunConfig default_config(const std::string& id);

// Resolves `cfg` against the defaults of cfg["experiment"] (unknown keys are
// rejected), runs the pipeline, writes config.txt, report.txt and the CSV
// artifacts into out_dir.
Report run_config(const RunConfig& cfg);
Report run_experiment(const std::string& id, const std::vector<std::string>& overrides = {});
// Reruns a stored config.txt; a version mismatch is reported on `warn`.
Report replay(const std::string& config_path, const std::vector<std::string>& overrides, std::ostream& warn);

}  // namespace pmd
