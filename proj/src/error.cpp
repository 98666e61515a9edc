/*
 * Copyright 2026 The gridops Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gridops/error.hpp"

namespace gridops {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::StoreIo: return "STORE_IO";
    case ErrorCode::AppendOnlyViolation: return "APPEND_ONLY_VIOLATION";
    case ErrorCode::AuthzDenied: return "AUTHZ_DENIED";
    case ErrorCode::HierarchyViolation: return "HIERARCHY_VIOLATION";
    case ErrorCode::DuplicateSiblingName: return "DUPLICATE_SIBLING_NAME";
    case ErrorCode::UnknownIdentity: return "UNKNOWN_IDENTITY";
    case ErrorCode::UnknownNode: return "UNKNOWN_NODE";
    case ErrorCode::UnknownService: return "UNKNOWN_SERVICE";
    case ErrorCode::FutureTimestamp: return "FUTURE_TIMESTAMP";
    case ErrorCode::PayloadTooLarge: return "PAYLOAD_TOO_LARGE";
    case ErrorCode::UnknownSite: return "UNKNOWN_SITE";
    case ErrorCode::MpiNotSupported: return "MPI_NOT_SUPPORTED";
    case ErrorCode::EmptyWindow: return "EMPTY_WINDOW";
    case ErrorCode::UnsortedResults: return "UNSORTED_RESULTS";
    case ErrorCode::NoCriticalServices: return "NO_CRITICAL_SERVICES";
    case ErrorCode::InvalidDims: return "INVALID_DIMS";
    case ErrorCode::ZeroCapacity: return "ZERO_CAPACITY";
    case ErrorCode::MissingMetric: return "MISSING_METRIC";
    case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::UnknownWms: return "UNKNOWN_WMS";
    case ErrorCode::UnknownMetric: return "UNKNOWN_METRIC";
    case ErrorCode::DuplicateTimestamp: return "DUPLICATE_TIMESTAMP";
    case ErrorCode::DateBeforeEpoch: return "DATE_BEFORE_EPOCH";
    case ErrorCode::NoSiteContact: return "NO_SITE_CONTACT";
    case ErrorCode::IllegalTransition: return "ILLEGAL_TRANSITION";
    case ErrorCode::UnknownTicket: return "UNKNOWN_TICKET";
    case ErrorCode::Unauthenticated: return "UNAUTHENTICATED";
    case ErrorCode::UnknownDn: return "UNKNOWN_DN";
  }
  return "UNKNOWN_ERROR";
}

}  // namespace gridops
