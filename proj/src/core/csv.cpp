// SPDX-License-Identifier: Apache-2.0
#include "core/csv.hpp"

#include "core/error.hpp"

namespace kenforge::csv {

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out.put(',');
        }
        out << escape(fields[i]);
    }
    out.put('\n');
}

bool Reader::next(std::vector<std::string>& record) {
    record.clear();
    int first = in_.peek();
    if (first == std::istream::traits_type::eof()) {
        return false;
    }
    ++record_number_;

    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    while (true) {
        const int ci = in_.get();
        if (ci == std::istream::traits_type::eof()) {
            if (in_quotes) {
                fail_input("record ", record_number_, ": unterminated quoted field");
            }
            record.push_back(std::move(field));
            return true;
        }
        const char c = static_cast<char>(ci);
        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    fail_input("record ", record_number_, ": stray quote inside unquoted field");
                }
                in_quotes = true;
                field_was_quoted = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_was_quoted = false;
                break;
            case '\r':
                if (in_.peek() == '\n') {
                    in_.get();
                }
                record.push_back(std::move(field));
                return true;
            case '\n':
                record.push_back(std::move(field));
                return true;
            default:
                if (field_was_quoted) {
                    fail_input("record ", record_number_, ": data after closing quote");
                }
                field.push_back(c);
        }
    }
}

}  // namespace kenforge::csv
