// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace kenforge::csv {

// RFC-4180-style field quoting: fields containing comma, quote, CR or LF
// are wrapped in quotes with embedded quotes doubled.
std::string escape(const std::string& field);

// Writes one record, LF-terminated.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Incremental RFC-4180 record reader. Accepts LF and CRLF record
// terminators and quoted fields spanning lines.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Reads the next record into `record`; returns false at end of input.
    // Throws an input error on malformed quoting.
    bool next(std::vector<std::string>& record);

    // 1-based number of the record last returned (the header row is 1).
    std::size_t record_number() const { return record_number_; }

private:
    std::istream& in_;
    std::size_t record_number_ = 0;
};

}  // namespace kenforge::csv
