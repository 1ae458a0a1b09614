package com.acme.model;

import java.util.ArrayList;
import java.util.List;

/** An account; "class Fake" in a comment must not count. */
public class Account {

    private final String id;
    private long balance;
    private final List<String> history = new ArrayList<>();

    public Account(String id) {
        this.id = id;
    }

    public String getId() {
        return id;
    }

    public long getBalance() {
        return balance;
    }

    public void deposit(long amount) {
        balance += amount;
        history.add("deposit:" + amount);
    }

    public boolean withdraw(long amount) {
        if (amount > balance) {
            return false;
        }
        balance -= amount;
        return true;
    }

    public List<String> history() {
        return history;
    }

    @Override
    public String toString() {
        return "Account(" + id + ")";
    }

    public static class Snapshot {
        private final long balance;

        public Snapshot(long balance) {
            this.balance = balance;
        }

        public long balance() {
            return balance;
        }
    }
}
