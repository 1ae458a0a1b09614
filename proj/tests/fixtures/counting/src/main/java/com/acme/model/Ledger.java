package com.acme.model;

import java.util.Map;

public interface Ledger {

    void record(String accountId, long delta);

    long total(String accountId);

    Map<String, Long> totals();

    default boolean isEmpty() {
        return totals().isEmpty();
    }
}
