#pragma once

// CSV dataset I/O. Feature files carry a header row of column names;
// response files are a single {0,1} column with a header. Numbers are
// written at 17 significant digits so save -> load round-trips exactly.
// Quoting follows RFC 4180.

#include <string>
#include <utility>
#include <vector>

#include "slr/model.hpp"

namespace slr {

std::string format_double(double v);  // %.17g

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                     const std::vector<std::string>& colnames = {});
void save_response_csv(const std::string& path, const Eigen::VectorXd& y);

Eigen::MatrixXd load_matrix_csv(const std::string& path);

// Loads features + {0,1} response, enforcing equal row counts; optionally
// unit-normalizes the feature columns.
std::pair<DesignMatrix, Eigen::VectorXd> load_csv_dataset(
    const std::string& features_path, const std::string& response_path,
    bool normalize = false);

}  // namespace slr
