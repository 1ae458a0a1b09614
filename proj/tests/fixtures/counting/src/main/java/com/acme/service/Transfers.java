package com.acme.service;

import com.acme.model.Account;
import com.acme.model.Ledger;

public abstract class Transfers {

    protected final Ledger ledger;

    protected Transfers(Ledger ledger) {
        this.ledger = ledger;
    }

    public boolean transfer(Account from, Account to, long amount) {
        if (!from.withdraw(amount)) {
            return false;
        }
        to.deposit(amount);
        ledger.record(from.getId(), -amount);
        ledger.record(to.getId(), amount);
        return true;
    }

    protected abstract boolean allowed(Account from, long amount);

    public <T extends Comparable<T>> T max(T a, T b) {
        return a.compareTo(b) >= 0 ? a : b;
    }
}
