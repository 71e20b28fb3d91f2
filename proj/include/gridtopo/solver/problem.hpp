#pragma once
#include <vector>
#include <Eigen/Dense>
#include <gridtopo/core/error.hpp>

namespace gridtopo::solver {

/// Contiguous block of design columns penalized as one unit.
struct Group
{
    Eigen::Index start;
    Eigen::Index size;
};

/// Consecutive blocks of `size` columns covering `p` columns.
inline std::vector<Group> uniform_groups(Eigen::Index p, Eigen::Index size)
{
    if (size <= 0 || p % size != 0) {
        throw error(errc::invalid_argument, "column count is not a multiple of the group size");
    }
    std::vector<Group> out;
    for (Eigen::Index s = 0; s < p; s += size) out.push_back({s, size});
    return out;
}

inline void check_partition(const std::vector<Group>& groups, Eigen::Index p)
{
    Eigen::Index next = 0;
    for (const auto& g : groups) {
        if (g.start != next || g.size <= 0) {
            throw error(errc::invalid_argument, "groups must be disjoint contiguous blocks covering all columns");
        }
        next += g.size;
    }
    if (next != p) {
        throw error(errc::invalid_argument, "groups must cover all design columns");
    }
}

/**
 * Grouped least-squares problem Z = sum_k X_k gamma_k in explicit form:
 * a T~ x P design, a length-T~ response and a column partition.
 */
class GroupedDesign
{
public:
    GroupedDesign(Eigen::MatrixXd design, Eigen::VectorXd response, std::vector<Group> groups)
        : design_(std::move(design)), response_(std::move(response)), groups_(std::move(groups))
    {
        if (design_.rows() < 1) throw error(errc::insufficient_data, "design needs at least one row");
        if (design_.rows() != response_.size()) {
            throw error(errc::invalid_argument, "design and response row counts differ");
        }
        check_partition(groups_, design_.cols());
    }

    const Eigen::MatrixXd& design() const { return design_; }
    const Eigen::VectorXd& response() const { return response_; }
    const std::vector<Group>& groups() const { return groups_; }
    Eigen::Index n_obs() const { return design_.rows(); }
    Eigen::Index n_cols() const { return design_.cols(); }

private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd response_;
    std::vector<Group> groups_;
};

/**
 * Sufficient statistics of a grouped least-squares problem: X^T X, X^T z,
 * z^T z and the observation count. Every fit routine works on this form, so
 * problems assembled from a shared panel Gram never materialize the design.
 */
struct GramProblem
{
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    double yty = 0.0;
    Eigen::Index n_obs = 0;
    std::vector<Group> groups;

    static GramProblem from_design(const GroupedDesign& d)
    {
        GramProblem p;
        p.gram = d.design().transpose() * d.design();
        p.xty = d.design().transpose() * d.response();
        p.yty = d.response().squaredNorm();
        p.n_obs = d.n_obs();
        p.groups = d.groups();
        return p;
    }

    Eigen::Index n_cols() const { return xty.size(); }
    std::size_t n_groups() const { return groups.size(); }

    void validate() const
    {
        if (gram.rows() != gram.cols() || gram.rows() != xty.size()) {
            throw error(errc::invalid_argument, "Gram matrix and cross-product sizes disagree");
        }
        if (n_obs < 1) throw error(errc::insufficient_data, "problem needs at least one observation");
        check_partition(groups, xty.size());
    }
};

} // namespace gridtopo::solver
