#pragma once

// Zero-shot prompt rendering for demographic field profiles.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nameprobe/core.hpp"

namespace nameprobe {

class EmptyName : public Error {
 public:
  using Error::Error;
};

class InvalidProfile : public Error {
 public:
  using Error::Error;
};

inline constexpr std::string_view kNamePlaceholder = "{fullname}";

/// Ordered set of fields requested by one prompt. The order fixes the
/// numbering of the request list and the order of the format block.
struct FieldProfile {
  std::string name;
  std::vector<FieldKind> fields;
  /// Overrides the generated text when set; must hold exactly one
  /// {fullname} placeholder.
  std::optional<std::string> template_text;

  /// Throws InvalidProfile when empty, when a kind repeats, or when a
  /// template override is malformed.
  void validate() const;
  bool contains(FieldKind kind) const;
};

/// Country of origin, nationality, gender, race and birth date.
FieldProfile complex_profile();
/// Nationality and gender.
FieldProfile simple_profile();
/// Gender, race and birth date, for voter-roll style data.
FieldProfile voter_profile();
/// Nationality, country of origin, ethnicity, gender and age.
FieldProfile hong_kong_profile();
std::optional<FieldProfile> builtin_profile(std::string_view name);

struct PromptText {
  std::string text;
  std::string profile;
  std::string record_id;

  bool operator==(const PromptText&) const = default;
};

/// The profile's template with the {fullname} placeholder still in place.
std::string prompt_template(const FieldProfile& profile);
std::string validity_template();

/// Replaces the single {fullname} placeholder. Names are inserted verbatim.
std::string render_template(std::string_view tmpl, std::string_view full_name);

/// Throws EmptyName for a blank name.
PromptText build_prompt(const FieldProfile& profile, std::string_view full_name,
                        std::string record_id = {});
/// Asks for a one-word VALID / INVALID verdict on whether the string is a
/// real person's legal name.
PromptText build_validity_prompt(std::string_view full_name, std::string record_id = {});

}  // namespace nameprobe
