#include "sentinel/csv.hpp"

namespace sentinel {

std::optional<std::vector<std::string>> CsvReader::next_row() {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool saw_anything = false;
    int c;
    while ((c = in_.get()) != EOF) {
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    field.push_back('"');
                    in_.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && field.empty()) {
            in_quotes = true;
            saw_anything = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
            saw_anything = true;
        } else if (ch == '\n') {
            if (!saw_anything && field.empty()) continue; // skip blank line
            fields.push_back(std::move(field));
            ++rows_read_;
            return fields;
        } else if (ch == '\r') {
            // swallowed; \r\n handled by the \n branch
        } else {
            field.push_back(ch);
            saw_anything = true;
        }
    }
    if (!saw_anything && field.empty() && fields.empty()) return std::nullopt;
    fields.push_back(std::move(field));
    ++rows_read_;
    return fields;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    CsvReader reader(in);
    std::vector<std::vector<std::string>> rows;
    while (auto row = reader.next_row()) rows.push_back(std::move(*row));
    return rows;
}

} // namespace sentinel
