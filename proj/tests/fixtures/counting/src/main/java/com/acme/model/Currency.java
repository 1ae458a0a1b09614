package com.acme.model;

public enum Currency {
    EUR, USD;

    public String symbol() {
        return this == EUR ? "E" : "$";
    }

    public static Currency parse(String code) {
        return valueOf(code.trim());
    }
}
