// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file schema.hpp
 * @brief Validation of experiment configs against the bundled JSON schema.
 *
 * Supports the draft-07 subset the bundled schema uses: type, properties,
 * additionalProperties (boolean), required, enum, minimum, exclusiveMinimum,
 * minItems, maxItems, minLength, items (single schema) and local $ref into
 * #/definitions.
 */

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace optoqst::cli {

/// The schema shipped in schema/experiment.schema.json, embedded at build time.
const nlohmann::json& experiment_schema();

/// Every violation as "<json-pointer>: <message>"; empty when valid.
std::vector<std::string> validate_against(const nlohmann::json& instance, const nlohmann::json& schema);

}  // namespace optoqst::cli
