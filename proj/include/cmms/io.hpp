#pragma once

#include "cmms/space.hpp"

#include <json.hpp>

#include <string>
#include <tuple>
#include <vector>

namespace cmms {

/* Space schema:
 *   {
 *     "nodes": [{"id", "measure", "dim_loc", "coords"?, "cell_volume"?}, ...],
 *     "edges": [{"i", "j", "length", "sigma"?}, ...],
 *     "grid":  {"nx", "ny"}?,
 *     "boundary": [node ids]?
 *   }
 * Nodes must appear in id order 0..n-1; optional members are all-or-none
 * across nodes. Schema errors name the offending element and field.
 */
nlohmann::json space_to_json(const DiscreteMMS& space);
DiscreteMMS space_from_json(const nlohmann::json& j);

DiscreteMMS load_space(const std::string& path);
void save_space(const DiscreteMMS& space, const std::string& path);

// Accepts a bare JSON array, {"values": [...]}, or a CSV with one value per
// line. expect_n = 0 skips the length check.
ScalarField load_field(const std::string& path, std::size_t expect_n);
void save_field(const ScalarField& f, const std::string& path);

// Rows of "src,dst,value" under a header line; infinite distances print as
// "inf" / "-inf".
void save_distances_csv(const std::string& path,
                        const std::vector<std::tuple<int, int, double>>& rows);

// Shortest decimal form that still round-trips: %.17g, with non-finite
// values named "inf" / "-inf" / "nan".
std::string format_double(double v);

/* Deterministic serialization: keys in sorted order, floats via
 * format_double (non-finite becomes the corresponding JSON string), no
 * whitespace, trailing newline. Two structurally equal documents with
 * bitwise-equal numbers produce identical bytes, which makes identity
 * transforms byte-comparable.
 */
std::string canonical_dump(const nlohmann::json& j);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);

}  // namespace cmms
