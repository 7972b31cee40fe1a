#ifndef LINKTHIEF_CHECKPOINT_HPP
#define LINKTHIEF_CHECKPOINT_HPP

#include <Eigen/Dense>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace linkthief {

/// Text container for named weight matrices. Values are written as C99
/// hexfloats so a save/load round trip is bit-exact.
///
/// Format:
///   linkthief-checkpoint v1
///   <count>
///   <name> <rows> <cols>
///   <rows*cols hexfloat values, row major>
///   ...
class Checkpoint {
public:
    void put(const std::string& name, const Eigen::MatrixXd& m) {
        if (entries_.count(name)) throw std::invalid_argument("duplicate checkpoint entry: " + name);
        order_.push_back(name);
        entries_[name] = m;
    }

    const Eigen::MatrixXd& get(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw std::out_of_range("checkpoint entry not found: " + name);
        return it->second;
    }

    bool has(const std::string& name) const { return entries_.count(name) > 0; }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
        out << "linkthief-checkpoint v1\n" << order_.size() << "\n";
        char buf[64];
        for (const auto& name : order_) {
            const auto& m = entries_.at(name);
            out << name << " " << m.rows() << " " << m.cols() << "\n";
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                for (Eigen::Index j = 0; j < m.cols(); ++j) {
                    std::snprintf(buf, sizeof buf, "%a", m(i, j));
                    out << buf << (j + 1 == m.cols() ? "" : " ");
                }
                out << "\n";
            }
        }
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
        std::string header;
        std::getline(in, header);
        if (header != "linkthief-checkpoint v1")
            throw std::runtime_error(path + ": not a checkpoint file");
        std::size_t count = 0;
        in >> count;
        Checkpoint ck;
        for (std::size_t e = 0; e < count; ++e) {
            std::string name;
            Eigen::Index rows, cols;
            if (!(in >> name >> rows >> cols))
                throw std::runtime_error(path + ": truncated checkpoint header");
            Eigen::MatrixXd m(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j) {
                    std::string tok;
                    if (!(in >> tok)) throw std::runtime_error(path + ": truncated checkpoint data");
                    m(i, j) = std::strtod(tok.c_str(), nullptr);
                }
            ck.put(name, m);
        }
        return ck;
    }

private:
    std::vector<std::string> order_;
    std::map<std::string, Eigen::MatrixXd> entries_;
};

} // namespace linkthief

#endif
