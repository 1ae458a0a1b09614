package com.acme.service;

import com.acme.model.Account;
import com.acme.model.Ledger;

public class LimitedTransfers extends Transfers {

    private final long limit;

    public LimitedTransfers(Ledger ledger, long limit) {
        super(ledger);
        this.limit = limit;
    }

    @Override
    protected boolean allowed(Account from, long amount) {
        return amount <= limit && from.getBalance() >= amount;
    }

    public long limit() {
        return limit;
    }

    public long remaining(Account account) {
        return Math.min(limit, account.getBalance());
    }
}
