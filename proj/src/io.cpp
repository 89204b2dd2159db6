#include "jstable/io.hpp"
#include "jstable/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace jstable {

bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
            std::size_t i2 = i, j2 = j;
            while (i2 < a.size() && std::isdigit(static_cast<unsigned char>(a[i2]))) ++i2;
            while (j2 < b.size() && std::isdigit(static_cast<unsigned char>(b[j2]))) ++j2;
            std::string na = a.substr(i, i2 - i), nb = b.substr(j, j2 - j);
            na.erase(0, std::min(na.find_first_not_of('0'), na.size()));
            nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size()));
            if (na.size() != nb.size()) return na.size() < nb.size();
            if (na != nb) return na < nb;
            i = i2;
            j = j2;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) return a.size() - i < b.size() - j;
    return a < b;
}

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::io_failure, "cannot write " + path);
    return os;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        cell = cell.substr(b);
        if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

void write_header(std::ostream& os, const std::vector<std::string>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
    os << '\n';
}

}  // namespace

void write_adjacency_csv(const std::string& path, const Adj& adj, const std::vector<std::string>& labels) {
    auto os = open_out(path);
    write_header(os, labels);
    for (int i = 0; i < adj.rows(); ++i) {
        for (int j = 0; j < adj.cols(); ++j) os << (j ? "," : "") << adj(i, j);
        os << '\n';
    }
}

DirectedGraph read_adjacency_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::io_failure, "cannot read " + path);
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::malformed_input, path + " is empty");
    auto labels = split_line(line);
    const int d = static_cast<int>(labels.size());
    Adj adj = Adj::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        if (!std::getline(is, line)) throw Error(ErrorKind::malformed_input, path + " has too few rows");
        auto cells = split_line(line);
        if (static_cast<int>(cells.size()) != d) throw Error(ErrorKind::malformed_input, path + " ragged row");
        for (int j = 0; j < d; ++j) {
            if (cells[j] != "0" && cells[j] != "1")
                throw Error(ErrorKind::malformed_input, path + " holds a non 0/1 entry");
            adj(i, j) = cells[j] == "1";
        }
    }
    return DirectedGraph(adj, labels);
}

void write_real_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
    auto os = open_out(path);
    write_header(os, labels);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_real(m(i, j));
        os << '\n';
    }
}

void write_dataset_csv(const std::string& path, const MultiRegimeData& data, const std::string& env_col) {
    auto os = open_out(path);
    auto labels = data.labels;
    labels.push_back(env_col);
    write_header(os, labels);
    for (const auto& r : data.regimes)
        for (int i = 0; i < r.n(); ++i) {
            for (int j = 0; j < r.data.cols(); ++j) os << format_real(r.data(i, j)) << ',';
            os << r.regime_id << '\n';
        }
}

LoadResult load_csv(const std::string& path, const std::string& env_col, int min_rows) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::io_failure, "cannot read " + path);
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::malformed_input, path + " is empty");
    auto header = split_line(line);
    LoadResult res;
    int env_idx = -1;
    for (int c = 0; c < static_cast<int>(header.size()); ++c)
        if (header[c] == env_col) env_idx = c;
    if (env_idx < 0) res.warnings.push_back("no '" + env_col + "' column; treating all rows as one regime");

    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw Error(ErrorKind::malformed_input, path + ": row " + std::to_string(rows.size() + 2) + " is ragged");
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw Error(ErrorKind::insufficient_data, path + " has no data rows");

    // a column is a feature when its first cell parses as a number
    std::vector<int> features;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        if (c == env_idx) continue;
        double tmp;
        if (parse_double(rows.front()[c], tmp))
            features.push_back(c);
        else
            res.warnings.push_back("dropping non-numeric column '" + header[c] + "'");
    }
    if (features.empty()) throw Error(ErrorKind::insufficient_data, "no numeric columns");

    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < rows.size(); ++r) groups[env_idx < 0 ? "pooled" : rows[r][env_idx]].push_back(r);
    std::vector<std::string> ids;
    for (const auto& kv : groups) ids.push_back(kv.first);
    std::sort(ids.begin(), ids.end(), natural_less);

    for (int c : features) res.data.labels.push_back(header[c]);
    for (const auto& id : ids) {
        const auto& idx = groups[id];
        if (static_cast<int>(idx.size()) < min_rows) {
            res.warnings.push_back("regime '" + id + "' has " + std::to_string(idx.size()) + " rows (< " +
                                   std::to_string(min_rows) + "), excluded");
            continue;
        }
        RegimeDataset ds;
        ds.regime_id = id;
        ds.spec.regime_id = id;
        ds.data.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(features.size()));
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t f = 0; f < features.size(); ++f) {
                double v;
                const auto& cell = rows[idx[r]][features[f]];
                if (!parse_double(cell, v))
                    throw Error(ErrorKind::malformed_input, "non-numeric cell '" + cell + "' in column '" +
                                                                header[features[f]] + "'");
                ds.data(r, f) = v;
            }
        res.data.regimes.push_back(std::move(ds));
    }
    if (res.data.regimes.empty()) throw Error(ErrorKind::insufficient_data, "no usable regimes in " + path);
    res.data.validate();
    return res;
}

void write_sepsets_json(const std::string& path, const SepSets& sepsets) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, set] : sepsets) j[std::to_string(key.first) + "," + std::to_string(key.second)] = set;
    auto os = open_out(path);
    os << j.dump(2) << '\n';
}

std::vector<std::pair<int, int>> read_guards(const std::string& path, const std::vector<std::string>& labels) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::io_failure, "cannot read " + path);
    auto index = [&](const std::string& name) {
        auto it = std::find(labels.begin(), labels.end(), name);
        if (it == labels.end()) throw Error(ErrorKind::malformed_input, "guard names unknown variable " + name);
        return static_cast<int>(it - labels.begin());
    };
    std::vector<std::pair<int, int>> out;
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto cells = split_line(line);
        cells.erase(std::remove(cells.begin(), cells.end(), std::string()), cells.end());
        if (cells.empty()) continue;
        if (cells.size() != 2) throw Error(ErrorKind::malformed_input, "guard line needs 'from,to'");
        out.emplace_back(index(cells[0]), index(cells[1]));
    }
    return out;
}

}  // namespace jstable
